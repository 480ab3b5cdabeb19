// Single configuration knob: where the task service lives.
// Resolution order: window.API_BASE_URL (set by a host page), a
// <meta name="api-base-url"> tag, then same-origin.

declare global {
  interface Window {
    API_BASE_URL?: string;
  }
}

export function apiBaseUrl(): string {
  if (typeof window !== "undefined" && window.API_BASE_URL) {
    return window.API_BASE_URL.replace(/\/$/, "");
  }
  const meta = document.querySelector<HTMLMetaElement>('meta[name="api-base-url"]');
  if (meta?.content) {
    return meta.content.replace(/\/$/, "");
  }
  return "";
}
