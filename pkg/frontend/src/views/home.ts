// Home view: category-tagged submission form plus the task list, which
// polls the server and updates row states in place. Fields are rendered
// exactly as the API returned them.

import type { AppContext } from "../app.js";
import { ApiError, type TaskRow } from "../api.js";
import { Poller } from "../poller.js";
import { clearSession, loadSession } from "../session.js";

const CATEGORIES: Array<[string, string]> = [
  ["brain_tumor", "Brain tumor"],
  ["kidney", "Kidney"],
  ["kidney_tumor", "Kidney tumor"],
];

export function renderHome(ctx: AppContext): { el: HTMLElement; destroy(): void } {
  const el = document.createElement("section");
  el.className = "home-view";
  const options = CATEGORIES
    .map(([value, label]) => `<option value="${value}">${label}</option>`)
    .join("");
  el.innerHTML = `
    <header>
      <h1>Tasks</h1>
      <span class="whoami"></span>
      <button type="button" data-action="logout">Log out</button>
    </header>
    <form class="submit-form">
      <label>Category <select name="category">${options}</select></label>
      <label>Image <input name="file" type="file"
             accept=".png,.pgm,.ppm,.miv1" /></label>
      <button type="submit">Submit</button>
      <p class="error" role="alert" hidden></p>
    </form>
    <table class="task-table">
      <thead>
        <tr><th>ID</th><th>Category</th><th>Submitted</th><th>State</th><th></th></tr>
      </thead>
      <tbody></tbody>
    </table>
    <p class="empty" hidden>No tasks yet.</p>
  `;

  const session = loadSession();
  (el.querySelector(".whoami") as HTMLSpanElement).textContent =
    session?.username ?? "";

  const form = el.querySelector(".submit-form") as HTMLFormElement;
  const categorySelect = el.querySelector('select[name="category"]') as HTMLSelectElement;
  const fileInput = el.querySelector('input[name="file"]') as HTMLInputElement;
  const errorLine = el.querySelector(".error") as HTMLParagraphElement;
  const tbody = el.querySelector("tbody") as HTMLTableSectionElement;
  const emptyLine = el.querySelector(".empty") as HTMLParagraphElement;

  let lastRows: TaskRow[] = [];

  function renderRows(rows: TaskRow[]): void {
    lastRows = rows;
    emptyLine.hidden = rows.length > 0;
    tbody.replaceChildren(
      ...rows.map((row) => {
        const tr = document.createElement("tr");
        tr.dataset.taskId = row.task_id;
        // textContent keeps the displayed fields byte-identical to the
        // API payload (no HTML parsing in between).
        const cells: Array<[string, string]> = [
          ["col-id", row.task_id],
          ["col-category", row.category],
          ["col-submitted", row.submitted_at],
          ["col-state", row.state],
        ];
        for (const [cls, value] of cells) {
          const td = document.createElement("td");
          td.className = cls;
          td.textContent = value;
          tr.append(td);
        }
        const action = document.createElement("td");
        action.className = "col-action";
        if (row.state === "done") {
          const link = document.createElement("a");
          link.href = `#/task/${row.task_id}`;
          link.textContent = "view result";
          action.append(link);
        }
        tr.append(action);
        return tr;
      }),
    );
  }

  async function refresh(): Promise<void> {
    renderRows(await ctx.client.listTasks());
  }

  const poller = new Poller(refresh, ctx.pollIntervalMs);
  poller.start();

  form.addEventListener("submit", (event) => {
    event.preventDefault();
    const file = fileInput.files?.[0];
    if (!file) {
      errorLine.textContent = "Choose a file first.";
      errorLine.hidden = false;
      return;
    }
    ctx.client
      .submitTask(categorySelect.value, file, file.name)
      .then(({ task_id }) => {
        errorLine.hidden = true;
        // Optimistic row; the next poll replaces it with server truth.
        renderRows([
          {
            task_id,
            category: categorySelect.value,
            submitted_at: new Date().toISOString(),
            state: "waiting",
          },
          ...lastRows.filter((row) => row.task_id !== task_id),
        ]);
      })
      .catch((err) => {
        errorLine.textContent =
          err instanceof ApiError ? err.message : "network error";
        errorLine.hidden = false;
      });
  });

  const logoutButton = el.querySelector('[data-action="logout"]') as HTMLButtonElement;
  logoutButton.addEventListener("click", () => {
    poller.stop();
    clearSession();
    ctx.client.token = null;
    ctx.navigate("#/login");
  });

  return {
    el,
    destroy: () => poller.stop(),
  };
}
