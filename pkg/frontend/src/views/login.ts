// Login / registration view. Successful registration immediately logs the
// new account in; API error messages are shown verbatim.

import type { AppContext } from "../app.js";
import { saveSession } from "../session.js";
import { ApiError } from "../api.js";

export function renderLogin(ctx: AppContext): { el: HTMLElement; destroy(): void } {
  const el = document.createElement("section");
  el.className = "login-view";
  el.innerHTML = `
    <h1>segserve</h1>
    <form class="login-form">
      <label>Username <input name="username" autocomplete="username" /></label>
      <label>Password <input name="password" type="password"
             autocomplete="current-password" /></label>
      <div class="actions">
        <button type="submit" data-action="login">Log in</button>
        <button type="button" data-action="register">Register</button>
      </div>
      <p class="error" role="alert" hidden></p>
    </form>
  `;

  const form = el.querySelector("form") as HTMLFormElement;
  const usernameInput = el.querySelector('input[name="username"]') as HTMLInputElement;
  const passwordInput = el.querySelector('input[name="password"]') as HTMLInputElement;
  const errorLine = el.querySelector(".error") as HTMLParagraphElement;

  function showError(message: string): void {
    errorLine.textContent = message;
    errorLine.hidden = false;
  }

  async function finishLogin(): Promise<void> {
    const result = await ctx.client.login(usernameInput.value, passwordInput.value);
    saveSession({
      token: result.token,
      username: usernameInput.value,
      expiresAt: result.expires_at,
    });
    ctx.navigate("#/home");
  }

  form.addEventListener("submit", (event) => {
    event.preventDefault();
    finishLogin().catch((err) => {
      showError(err instanceof ApiError ? err.message : "network error");
    });
  });

  const registerButton = el.querySelector('[data-action="register"]') as HTMLButtonElement;
  registerButton.addEventListener("click", () => {
    ctx.client
      .register(usernameInput.value, passwordInput.value)
      .then(finishLogin)
      .catch((err) => {
        showError(err instanceof ApiError ? err.message : "network error");
      });
  });

  return { el, destroy: () => {} };
}
