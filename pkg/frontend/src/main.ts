import { StudyClient } from "./api";
import { SessionRunner } from "./session";
import { mountApp } from "./view";
import { ApiError } from "./types";

const SESSION_KEY = "petsumm-session-id";

// Query parameters configure the console: ?reader=P000&token=...&base=...
// An unfinished session id persisted in localStorage is resumed so a
// refresh continues where the reader left off.
async function boot(): Promise<void> {
  const root = document.getElementById("root");
  if (!root) throw new Error("missing #root element");
  const params = new URLSearchParams(window.location.search);
  const client = new StudyClient({
    baseUrl: params.get("base") ?? "",
    token: params.get("token") ?? undefined,
  });
  const runner = new SessionRunner(client);
  mountApp(root, runner);

  const stored = window.localStorage.getItem(SESSION_KEY);
  if (stored) {
    try {
      await runner.resume(stored);
      return;
    } catch (err) {
      if (!(err instanceof ApiError && err.status === 404)) throw err;
      window.localStorage.removeItem(SESSION_KEY); // stale id
    }
  }
  const reader = params.get("reader");
  if (!reader) {
    root.textContent = "Add ?reader=<your id> to the URL to begin.";
    return;
  }
  await runner.start(reader, Number(params.get("seed") ?? "0"));
  if (runner.id) window.localStorage.setItem(SESSION_KEY, runner.id);
}

void boot();
