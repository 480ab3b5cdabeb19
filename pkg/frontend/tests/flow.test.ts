// Scripted end-to-end flow against a stateful in-memory fake of the task
// service: login -> submit -> watch the row walk waiting/queued/running/done
// across polls -> render the result with correct pixel dimensions; any 401
// drops the session and lands back on login.

import { afterEach, beforeEach, describe, expect, it, vi } from "vitest";

import { createApp, type App } from "../src/app.js";
import { loadSession } from "../src/session.js";

const TASK_STATES = ["waiting", "queued", "running", "done"] as const;

function pgmBytes(): Uint8Array {
  const header = new TextEncoder().encode("P5\n2 2\n255\n");
  const out = new Uint8Array(header.length + 4);
  out.set(header, 0);
  out.set([0, 255, 255, 0], header.length);
  return out;
}

function miv1Bytes(): Uint8Array {
  // 2x2x3 volume of 0/1 voxels
  const header = new TextEncoder().encode("MIV1 2 2 3\n");
  const body = new Uint8Array(12 * 4);
  const view = new DataView(body.buffer);
  [0, 1, 1, 0, 1, 1, 0, 0, 0, 0, 1, 1].forEach((v, i) =>
    view.setFloat32(i * 4, v, true),
  );
  const out = new Uint8Array(header.length + body.length);
  out.set(header, 0);
  out.set(body, header.length);
  return out;
}

interface FakeTask {
  task_id: string;
  category: string;
  submitted_at: string;
  stateIndex: number;
}

class FakeServer {
  users = new Map<string, string>();
  tokens = new Map<string, string>();
  tasks: FakeTask[] = [];
  forceUnauthorized = false;
  private nextId = 1;

  handle(url: string, init: RequestInit): Response {
    const method = (init.method ?? "GET").toUpperCase();
    const path = url.replace(/^https?:\/\/[^/]+/, "");

    if (path === "/api/register" && method === "POST") {
      const body = JSON.parse(String(init.body));
      if (this.users.has(body.username)) {
        return this.error(409, "username_taken", "username exists");
      }
      this.users.set(body.username, body.password);
      return this.json(201, { user_id: this.users.size });
    }
    if (path === "/api/login" && method === "POST") {
      const body = JSON.parse(String(init.body));
      if (this.users.get(body.username) !== body.password) {
        return this.error(401, "auth_failed", "bad credentials");
      }
      const token = `token-${body.username}`;
      this.tokens.set(token, body.username);
      return this.json(200, { token, expires_at: "2026-12-31T00:00:00Z" });
    }

    if (!this.authorized(init)) {
      return this.error(401, "auth_failed", "missing bearer token");
    }

    if (path === "/api/tasks" && method === "POST") {
      const form = init.body as FormData;
      const task: FakeTask = {
        task_id: `task-${this.nextId++}`,
        category: String(form.get("category")),
        submitted_at: "2026-02-01T10:00:00Z",
        stateIndex: 0,
      };
      this.tasks.unshift(task);
      return this.json(202, { task_id: task.task_id });
    }
    if (path === "/api/tasks" && method === "GET") {
      const rows = this.tasks.map((t) => ({
        task_id: t.task_id,
        category: t.category,
        submitted_at: t.submitted_at,
        state: TASK_STATES[t.stateIndex],
      }));
      // Each poll observes the next stage of every live task.
      for (const t of this.tasks) {
        t.stateIndex = Math.min(t.stateIndex + 1, TASK_STATES.length - 1);
      }
      return this.json(200, rows);
    }

    const detail = /^\/api\/tasks\/([^/]+)$/.exec(path);
    if (detail && method === "GET") {
      const task = this.tasks.find((t) => t.task_id === detail[1]);
      if (!task) {
        return this.error(404, "not_found", "no such task");
      }
      const state = TASK_STATES[task.stateIndex];
      return this.json(200, {
        task_id: task.task_id,
        category: task.category,
        submitted_at: task.submitted_at,
        state,
        safety: state === "done" ? "safe" : "unsafe",
        result_ready: state === "done",
        error: null,
      });
    }

    const result = /^\/api\/tasks\/([^/]+)\/result$/.exec(path);
    if (result && method === "GET") {
      const task = this.tasks.find((t) => t.task_id === result[1]);
      if (!task) {
        return this.error(404, "not_found", "no such task");
      }
      if (TASK_STATES[task.stateIndex] !== "done") {
        return this.error(409, "result_not_ready", "still processing");
      }
      const payload =
        task.category === "brain_tumor" ? miv1Bytes() : pgmBytes();
      return new Response(payload.slice().buffer, { status: 200 });
    }

    return this.error(404, "not_found", `no route ${method} ${path}`);
  }

  private authorized(init: RequestInit): boolean {
    if (this.forceUnauthorized) {
      return false;
    }
    const headers = new Headers(init.headers);
    const value = headers.get("Authorization") ?? "";
    return this.tokens.has(value.replace("Bearer ", ""));
  }

  private json(status: number, body: unknown): Response {
    return new Response(JSON.stringify(body), { status });
  }

  private error(status: number, code: string, message: string): Response {
    return this.json(status, { error: code, message });
  }
}

async function flushMicrotasks(turns = 20): Promise<void> {
  for (let i = 0; i < turns; i += 1) {
    await Promise.resolve();
  }
}

let server: FakeServer;
let root: HTMLElement;
let app: App | null = null;

beforeEach(() => {
  vi.useFakeTimers();
  localStorage.clear();
  location.hash = "";
  server = new FakeServer();
  vi.stubGlobal("fetch", (input: RequestInfo | URL, init: RequestInit = {}) =>
    Promise.resolve(server.handle(String(input), init)),
  );
  root = document.createElement("div");
  document.body.append(root);
});

afterEach(() => {
  app?.destroy();
  app = null;
  root.remove();
  vi.unstubAllGlobals();
  vi.useRealTimers();
});

function query<T extends Element>(selector: string): T {
  const found = root.querySelector(selector);
  if (!found) {
    throw new Error(`missing element ${selector}`);
  }
  return found as T;
}

async function logIn(username = "doctor"): Promise<void> {
  server.users.set(username, "password123");
  query<HTMLInputElement>('input[name="username"]').value = username;
  query<HTMLInputElement>('input[name="password"]').value = "password123";
  query<HTMLFormElement>("form.login-form").dispatchEvent(
    new Event("submit", { bubbles: true, cancelable: true }),
  );
  await flushMicrotasks();
  await vi.advanceTimersByTimeAsync(0); // first poll of the home view
}

describe("UI flow", () => {
  it("boots to the login view when no session exists", () => {
    app = createApp(root, { pollIntervalMs: 2000 });
    expect(root.querySelector(".login-view")).not.toBeNull();
    expect(location.hash).toBe("#/login");
  });

  it("registers, auto-logs-in, and lands on home", async () => {
    app = createApp(root, { pollIntervalMs: 2000 });
    query<HTMLInputElement>('input[name="username"]').value = "newdoc";
    query<HTMLInputElement>('input[name="password"]').value = "password123";
    query<HTMLButtonElement>('[data-action="register"]').click();
    await flushMicrotasks();
    expect(root.querySelector(".home-view")).not.toBeNull();
    expect(loadSession()?.username).toBe("newdoc");
  });

  it("shows a login error inline without navigating", async () => {
    app = createApp(root, { pollIntervalMs: 2000 });
    query<HTMLInputElement>('input[name="username"]').value = "ghost";
    query<HTMLInputElement>('input[name="password"]').value = "whatever123";
    query<HTMLFormElement>("form.login-form").dispatchEvent(
      new Event("submit", { bubbles: true, cancelable: true }),
    );
    await flushMicrotasks();
    const error = query<HTMLParagraphElement>(".error");
    expect(error.hidden).toBe(false);
    expect(error.textContent).toBe("bad credentials"); // API message verbatim
    expect(root.querySelector(".login-view")).not.toBeNull();
  });

  it("runs login -> submit -> waiting to done -> rendered result", async () => {
    app = createApp(root, { pollIntervalMs: 2000 });
    await logIn();
    expect(root.querySelector(".home-view")).not.toBeNull();
    expect(query<HTMLParagraphElement>(".empty").hidden).toBe(false);

    // submit a file
    const file = new File([pgmBytes()], "scan.pgm");
    const input = query<HTMLInputElement>('input[name="file"]');
    Object.defineProperty(input, "files", { value: [file], configurable: true });
    query<HTMLSelectElement>('select[name="category"]').value = "kidney";
    query<HTMLFormElement>("form.submit-form").dispatchEvent(
      new Event("submit", { bubbles: true, cancelable: true }),
    );
    await flushMicrotasks();

    // optimistic row appears immediately as waiting
    let stateCell = query<HTMLTableCellElement>(".col-state");
    expect(stateCell.textContent).toBe("waiting");

    // successive polls walk the row through the queue states in place
    const seen: string[] = [];
    for (let i = 0; i < 4; i += 1) {
      await vi.advanceTimersByTimeAsync(2000);
      await flushMicrotasks();
      stateCell = query<HTMLTableCellElement>(".col-state");
      seen.push(stateCell.textContent ?? "");
      if (stateCell.textContent === "done") {
        break;
      }
    }
    expect(seen).toContain("done");
    expect(seen.length).toBeLessThanOrEqual(4);

    // a done row exposes the result action
    const link = query<HTMLAnchorElement>(".col-action a");
    expect(link.getAttribute("href")).toMatch(/^#\/task\/task-/);

    // open the result view; the canvas must carry the decoded dimensions
    app.navigate(link.getAttribute("href")!);
    await flushMicrotasks();
    expect(root.querySelector(".task-view")).not.toBeNull();
    const canvas = query<HTMLCanvasElement>("canvas");
    expect(canvas.width).toBe(2);
    expect(canvas.height).toBe(2);
    expect(query<HTMLElement>(".meta-state").textContent).toBe("done");
    expect(query<HTMLElement>(".meta-safety").textContent).toBe("safe");
  });

  it("renders a volume result behind a slice slider with depth bounds", async () => {
    app = createApp(root, { pollIntervalMs: 2000 });
    await logIn();

    const file = new File([miv1Bytes()], "vol.miv1");
    const input = query<HTMLInputElement>('input[name="file"]');
    Object.defineProperty(input, "files", { value: [file], configurable: true });
    query<HTMLSelectElement>('select[name="category"]').value = "brain_tumor";
    query<HTMLFormElement>("form.submit-form").dispatchEvent(
      new Event("submit", { bubbles: true, cancelable: true }),
    );
    await flushMicrotasks();
    const taskId = server.tasks[0].task_id;
    server.tasks[0].stateIndex = TASK_STATES.length - 1; // already done

    app.navigate(`#/task/${taskId}`);
    await flushMicrotasks();
    const canvas = query<HTMLCanvasElement>("canvas");
    expect(canvas.width).toBe(2);
    expect(canvas.height).toBe(2);
    const slider = query<HTMLInputElement>('input[type="range"]');
    expect(slider.min).toBe("0");
    expect(slider.max).toBe("2"); // depth 3 -> slices 0..2
    expect(query<HTMLLabelElement>(".slice-control").hidden).toBe(false);
    expect(query<HTMLSpanElement>(".slice-label").textContent).toBe("1 / 3");

    slider.value = "2";
    slider.dispatchEvent(new Event("input", { bubbles: true }));
    expect(query<HTMLSpanElement>(".slice-label").textContent).toBe("3 / 3");
  });

  it("shows the processing placeholder on a 409 result", async () => {
    app = createApp(root, { pollIntervalMs: 2000 });
    await logIn();
    const file = new File([pgmBytes()], "scan.pgm");
    const input = query<HTMLInputElement>('input[name="file"]');
    Object.defineProperty(input, "files", { value: [file], configurable: true });
    query<HTMLFormElement>("form.submit-form").dispatchEvent(
      new Event("submit", { bubbles: true, cancelable: true }),
    );
    await flushMicrotasks();
    const taskId = server.tasks[0].task_id;

    app.navigate(`#/task/${taskId}`); // still waiting server-side
    await flushMicrotasks();
    expect(query<HTMLParagraphElement>(".placeholder").hidden).toBe(false);
    expect(root.querySelector("canvas")!.getAttribute("width")).toBeNull();
  });

  it("clears the session and returns to login on any 401", async () => {
    app = createApp(root, { pollIntervalMs: 2000 });
    await logIn();
    expect(loadSession()).not.toBeNull();

    server.forceUnauthorized = true;
    await vi.advanceTimersByTimeAsync(2000); // next poll gets the 401
    await flushMicrotasks();

    expect(loadSession()).toBeNull();
    expect(root.querySelector(".login-view")).not.toBeNull();
    expect(location.hash).toBe("#/login");
  });

  it("polling stops after logout", async () => {
    app = createApp(root, { pollIntervalMs: 2000 });
    await logIn();
    const callsBefore = server.tasks.length; // proxy: count list calls instead
    let listCalls = 0;
    const original = server.handle.bind(server);
    server.handle = (url, init) => {
      if (/\/api\/tasks$/.test(url) && (init.method ?? "GET") === "GET") {
        listCalls += 1;
      }
      return original(url, init);
    };

    query<HTMLButtonElement>('[data-action="logout"]').click();
    await flushMicrotasks();
    expect(root.querySelector(".login-view")).not.toBeNull();

    await vi.advanceTimersByTimeAsync(20000);
    await flushMicrotasks();
    expect(listCalls).toBe(0);
    expect(callsBefore).toBe(0);
  });
});
