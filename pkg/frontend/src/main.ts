/**
 * Wires the forms to the client. The page never invents a number: every
 * render happens after the server has answered, and failed requests leave
 * the previous view in place with the server's message shown verbatim.
 */

import { AdvisorClient, ApiError, type Forecast, type Recommendation } from "./api.js";
import { collectObservation, debounce, newView, parseCountsCsv, type SessionView } from "./model.js";
import { renderError, renderSession } from "./render.js";

const MODE_DEFAULT_M: Record<string, number> = { incidence: 25, delayed: 100 };
// trailing edge, four per second tops
const WHATIF_WAIT_MS = 250;

interface AppState {
  client: AdvisorClient | null;
  view: SessionView | null;
}

// server messages pass through word for word
function message(err: unknown): string {
  if (err instanceof ApiError) return err.message;
  return err instanceof Error ? err.message : String(err);
}

export function setupApp(doc: Document = document): void {
  const state: AppState = { client: null, view: null };

  function byId<T extends HTMLElement>(id: string): T {
    const node = doc.getElementById(id);
    if (!node) throw new Error(`missing #${id}`);
    return node as T;
  }

  const connectForm = byId<HTMLFormElement>("connect-form");
  const createForm = byId<HTMLFormElement>("create-form");
  const resumeForm = byId<HTMLFormElement>("resume-form");
  const sessionPane = byId<HTMLElement>("session-pane");
  const controls = byId<HTMLElement>("controls");
  const modeSelect = byId<HTMLSelectElement>("mode");
  const budgetInput = byId<HTMLInputElement>("budget");
  const whatifSlider = byId<HTMLInputElement>("whatif-budget");
  const observeForm = byId<HTMLFormElement>("observe-form");

  const redraw = () => {
    if (state.view) renderSession(sessionPane, state.view);
  };

  // once a view exists, open the controls and offer its arms for entry
  const showSession = (view: SessionView) => {
    state.view = view;
    const armSelect = byId<HTMLSelectElement>("observe-arm");
    armSelect.replaceChildren(
      ...view.info.arms.map((arm) => {
        const opt = doc.createElement("option");
        opt.value = arm;
        opt.textContent = arm;
        return opt;
      }),
    );
    controls.hidden = false;
    redraw();
  };

  connectForm.addEventListener("submit", async (ev) => {
    ev.preventDefault();
    renderError(connectForm, null);
    const base = byId<HTMLInputElement>("base-url").value.trim();
    const token = byId<HTMLInputElement>("token").value.trim();
    if (!base) {
      renderError(connectForm, "enter the service URL");
      return;
    }
    const client = new AdvisorClient(base, token || undefined);
    try {
      await client.healthz();
    } catch (err) {
      renderError(connectForm, message(err));
      return;
    }
    state.client = client;
    connectForm.classList.add("connected");
    createForm.hidden = false;
    resumeForm.hidden = false;
  });

  createForm.addEventListener("submit", async (ev) => {
    ev.preventDefault();
    renderError(createForm, null);
    if (!state.client) return;
    const csv = byId<HTMLTextAreaElement>("initial-counts").value;
    if (!csv.trim()) {
      renderError(createForm, "paste initial counts first (arm,label[,count] per line)");
      return;
    }
    let parsed;
    try {
      parsed = parseCountsCsv(csv);
    } catch (err) {
      renderError(createForm, message(err));
      return;
    }
    const sid = byId<HTMLInputElement>("session-id").value.trim() || undefined;
    let view: SessionView;
    try {
      const created = await state.client.createSession(parsed.arms, parsed.counts, sid);
      const info = await state.client.getSession(created.id);
      view = newView(info, created.forecasts);
    } catch (err) {
      renderError(createForm, message(err));
      return;
    }
    showSession(view);
  });

  resumeForm.addEventListener("submit", async (ev) => {
    ev.preventDefault();
    renderError(resumeForm, null);
    if (!state.client) return;
    const sid = byId<HTMLInputElement>("resume-id").value.trim();
    if (!sid) {
      renderError(resumeForm, "enter the session id to load");
      return;
    }
    // the whole dashboard rebuilds from the server: current state, fresh
    // forecasts, and past recommendation draws out of the event log
    let view: SessionView;
    try {
      const info = await state.client.getSession(sid);
      const forecasts = (await state.client.forecast(sid)).forecasts;
      const history = await state.client.history(sid);
      view = newView(info, forecasts);
      for (const event of history.events) {
        if (event.kind === "recommended") {
          view.recommendations.push(event as unknown as Recommendation);
        }
      }
    } catch (err) {
      renderError(resumeForm, message(err));
      return;
    }
    showSession(view);
  });

  modeSelect.addEventListener("change", () => {
    budgetInput.value = String(MODE_DEFAULT_M[modeSelect.value] ?? 25);
  });

  byId<HTMLButtonElement>("recommend").addEventListener("click", async () => {
    renderError(controls, null);
    if (!state.client || !state.view) return;
    const mode = modeSelect.value === "delayed" ? "delayed" : "incidence";
    const m = Number(budgetInput.value);
    if (!Number.isInteger(m) || m <= 0) {
      renderError(controls, "budget must be a positive whole number");
      return;
    }
    try {
      const rec = await state.client.recommend(state.view.info.id, mode, m);
      state.view.recommendations.push(rec);
    } catch (err) {
      renderError(controls, message(err));
      return;
    }
    redraw();
  });

  observeForm.addEventListener("submit", async (ev) => {
    ev.preventDefault();
    renderError(observeForm, null);
    if (!state.client || !state.view) return;
    const arm = byId<HTMLSelectElement>("observe-arm").value;
    const rows = [...observeForm.querySelectorAll<HTMLElement>(".obs-row")].map((row) => ({
      label: row.querySelector<HTMLInputElement>(".obs-label")?.value ?? "",
      count: row.querySelector<HTMLInputElement>(".obs-count")?.value ?? "",
    }));
    let counts;
    try {
      counts = collectObservation(rows);
    } catch (err) {
      renderError(observeForm, message(err));
      return;
    }
    // view updates only once the server has folded the batch in
    try {
      const result = await state.client.observe(state.view.info.id, arm, counts);
      const info = await state.client.getSession(state.view.info.id);
      state.view = { ...state.view, info, forecasts: result.forecasts };
    } catch (err) {
      renderError(observeForm, message(err));
      return;
    }
    observeForm.reset();
    redraw();
  });

  const pullWhatif = debounce(async (m: number) => {
    if (!state.client || !state.view) return;
    if (state.view.whatif.has(m)) return;
    let forecasts: Forecast[];
    try {
      forecasts = (await state.client.forecast(state.view.info.id, m)).forecasts;
    } catch (err) {
      renderError(controls, message(err));
      return;
    }
    state.view.whatif.set(m, forecasts);
    redraw();
  }, WHATIF_WAIT_MS);

  whatifSlider.addEventListener("input", () => {
    const m = Number(whatifSlider.value);
    // M=0 is a legal what-if (the server answers with flat zeros)
    if (Number.isInteger(m) && m >= 0) pullWhatif(m);
  });

  byId<HTMLButtonElement>("add-obs-row").addEventListener("click", () => {
    const row = doc.createElement("div");
    row.className = "obs-row";
    const label = doc.createElement("input");
    label.className = "obs-label";
    label.placeholder = "species label";
    const count = doc.createElement("input");
    count.className = "obs-count";
    count.placeholder = "count";
    row.append(label, count);
    byId<HTMLElement>("obs-rows").appendChild(row);
  });
}

if (typeof document !== "undefined") {
  if (document.readyState !== "loading") {
    if (document.getElementById("connect-form")) setupApp();
  } else {
    document.addEventListener("DOMContentLoaded", () => setupApp());
  }
}
