// Client session kept in browser storage; cleared on logout or any 401.

const STORAGE_KEY = "segserve.session";

export interface ClientSession {
  token: string;
  username: string;
  expiresAt: string;
}

export function saveSession(session: ClientSession): void {
  localStorage.setItem(STORAGE_KEY, JSON.stringify(session));
}

export function loadSession(): ClientSession | null {
  const raw = localStorage.getItem(STORAGE_KEY);
  if (!raw) {
    return null;
  }
  try {
    const parsed = JSON.parse(raw) as ClientSession;
    if (!parsed.token || !parsed.username) {
      return null;
    }
    return parsed;
  } catch {
    return null;
  }
}

export function clearSession(): void {
  localStorage.removeItem(STORAGE_KEY);
}
