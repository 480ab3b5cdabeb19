// Application shell: hash routing between the login, home, and task views,
// plus the 401 handler that drops the session and returns to login.

import { ApiClient } from "./api.js";
import { clearSession, loadSession } from "./session.js";
import { renderHome } from "./views/home.js";
import { renderLogin } from "./views/login.js";
import { renderTask } from "./views/task.js";

export interface AppContext {
  client: ApiClient;
  navigate(hash: string): void;
  pollIntervalMs: number;
}

export interface AppOptions {
  baseUrl?: string;
  pollIntervalMs?: number;
}

export interface App {
  navigate(hash: string): void;
  destroy(): void;
  client: ApiClient;
}

type MountedView = { el: HTMLElement; destroy(): void };

export function createApp(root: HTMLElement, options: AppOptions = {}): App {
  let current: MountedView | null = null;
  let routedHash: string | null = null;

  const client = new ApiClient(options.baseUrl ?? "", () => {
    clearSession();
    navigate("#/login");
  });

  const ctx: AppContext = {
    client,
    navigate,
    pollIntervalMs: options.pollIntervalMs ?? 2000,
  };

  function mount(view: MountedView): void {
    current?.destroy();
    root.replaceChildren(view.el);
    current = view;
  }

  function currentHash(): string {
    return location.hash || "#/home";
  }

  function route(): void {
    const hash = currentHash();
    routedHash = hash;
    const session = loadSession();
    if (!session && hash !== "#/login") {
      navigate("#/login");
      return;
    }
    if (session) {
      client.token = session.token;
    }
    const taskMatch = /^#\/task\/(.+)$/.exec(hash);
    if (hash === "#/login") {
      mount(renderLogin(ctx));
    } else if (taskMatch) {
      mount(renderTask(ctx, decodeURIComponent(taskMatch[1])));
    } else {
      mount(renderHome(ctx));
    }
  }

  function navigate(hash: string): void {
    location.hash = hash;
    // Route immediately; the hashchange listener dedupes via routedHash.
    if (routedHash !== currentHash()) {
      route();
    }
  }

  const onHashChange = () => {
    if (routedHash !== currentHash()) {
      route();
    }
  };
  window.addEventListener("hashchange", onHashChange);
  route();

  return {
    navigate,
    client,
    destroy() {
      window.removeEventListener("hashchange", onHashChange);
      current?.destroy();
      current = null;
      root.replaceChildren();
    },
  };
}
