/**
 * DOM rendering. One rule governs everything here: a number shown to the
 * user is the number the server sent, stringified with String(). No
 * rounding, no arithmetic, no client-side statistics.
 */

import type { Forecast, Recommendation, SessionInfo } from "./api.js";
import { discoveryCurve, whatifCurves } from "./chart.js";
import type { SessionView } from "./model.js";

function el(tag: string, className?: string, text?: string): HTMLElement {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

function forecastFor(forecasts: Forecast[], arm: string): Forecast | undefined {
  return forecasts.find((f) => f.arm === arm);
}

/** One card per arm: observed total, distinct count, forecast mean and band. */
export function renderArmCards(info: SessionInfo, forecasts: Forecast[]): HTMLElement {
  const wrap = el("div", "arm-cards");
  for (const stat of info.stats.arms) {
    const card = el("div", "arm-card");
    card.dataset["arm"] = stat.name;
    card.appendChild(el("h3", "arm-name", stat.name));
    const dl = el("dl");
    const row = (label: string, value: string, cls: string) => {
      dl.appendChild(el("dt", undefined, label));
      dl.appendChild(el("dd", cls, value));
    };
    row("observed", String(stat.observed), "observed");
    row("distinct", String(stat.distinct), "distinct");
    const f = forecastFor(forecasts, stat.name);
    if (f) {
      row(`expected new at M=${String(f.m)}`, String(f.mean), "forecast-mean");
      const lo = f.quantiles["0.1"];
      const hi = f.quantiles["0.9"];
      if (lo !== undefined && hi !== undefined) {
        row("10-90% band", `${String(lo)} to ${String(hi)}`, "forecast-band");
      }
    }
    card.appendChild(dl);
    wrap.appendChild(card);
  }
  return wrap;
}

/**
 * Recommendation panel. Every draw the user has requested stays listed,
 * newest first, each with the rng key the server used, so repeated clicks
 * are visibly distinct draws rather than a stuck button.
 */
export function renderRecommendations(recs: Recommendation[]): HTMLElement {
  const panel = el("div", "recommendation-panel");
  if (recs.length === 0) {
    panel.appendChild(el("p", "placeholder", "no recommendation requested yet"));
    return panel;
  }
  const list = el("ul", "rec-list");
  for (let i = recs.length - 1; i >= 0; i--) {
    const rec = recs[i]!;
    const item = el("li", "rec");
    item.appendChild(el("span", "rec-mode", `${rec.mode}, M=${String(rec.m)}`));
    if (rec.arm !== undefined && rec.arm !== null) {
      item.appendChild(el("strong", "rec-arm", rec.arm));
    } else if (rec.allocation) {
      const parts = Object.entries(rec.allocation).map(([a, n]) => `${a}: ${String(n)}`);
      item.appendChild(el("strong", "rec-allocation", parts.join(", ")));
    }
    const expected = el("ul", "rec-expected");
    for (const [arm, v] of Object.entries(rec.expected_new)) {
      const li = el("li", undefined, `${arm}: ${String(v)}`);
      li.dataset["arm"] = arm;
      expected.appendChild(li);
    }
    item.appendChild(expected);
    item.appendChild(el("span", "rec-seed", `seed ${rec.rng_key.map(String).join("/")}`));
    list.appendChild(item);
  }
  panel.appendChild(list);
  return panel;
}

export function renderDiscoveryCurve(info: SessionInfo): HTMLElement {
  const wrap = el("div", "discovery-curve");
  wrap.appendChild(el("h3", undefined, "discovery curve"));
  wrap.appendChild(discoveryCurve(info.stats.curve));
  return wrap;
}

export function renderWhatif(view: SessionView): HTMLElement {
  const wrap = el("div", "whatif");
  wrap.appendChild(el("h3", undefined, "what-if: expected new species by budget"));
  wrap.appendChild(whatifCurves(view.whatif));
  return wrap;
}

/** Inline error strip; server messages are shown verbatim. */
export function renderError(target: HTMLElement, message: string | null): void {
  let strip = target.querySelector<HTMLElement>(".error-strip");
  if (message === null) {
    if (strip) strip.remove();
    return;
  }
  if (!strip) {
    strip = el("div", "error-strip");
    strip.setAttribute("role", "alert");
    target.prepend(strip);
  }
  strip.textContent = message;
}

/** Replace `host`'s children with the full session view. */
export function renderSession(host: HTMLElement, view: SessionView): void {
  host.replaceChildren();
  const head = el("div", "session-head");
  head.appendChild(el("h2", "session-id", view.info.id));
  head.appendChild(
    el("span", "session-meta", `events: ${String(view.info.n_events)}, ess: ${String(view.info.ess)}`),
  );
  host.appendChild(head);
  host.appendChild(renderArmCards(view.info, view.forecasts));
  host.appendChild(renderRecommendations(view.recommendations));
  host.appendChild(renderDiscoveryCurve(view.info));
  if (view.whatif.size > 0) host.appendChild(renderWhatif(view));
}
