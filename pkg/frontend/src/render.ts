/**
 * DOM rendering. The differential list is rendered in server response order,
 * never re-sorted or filtered; tests snapshot the DOM against the response.
 */

import type { DiagnosisResponse, DifferentialEntry, FindingSuggestion } from "./api.js";
import type { Chip, RankDelta, SessionState } from "./state.js";
import { barWidth, rankDeltas } from "./state.js";

const CATEGORY_CLASS: Record<string, string> = {
  Infection: "cat-infection",
  Neoplasia: "cat-neoplasia",
  ConnectiveTissue: "cat-connective",
  Other: "cat-other",
};

function el<K extends keyof HTMLElementTagNameMap>(
  doc: Document,
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = doc.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

export function renderSuggestions(
  container: HTMLElement,
  suggestions: FindingSuggestion[],
  onPick: (s: FindingSuggestion) => void,
): void {
  const doc = container.ownerDocument;
  container.textContent = "";
  for (const suggestion of suggestions) {
    const item = el(doc, "button", "suggestion");
    item.type = "button";
    item.dataset.findingId = String(suggestion.id);
    item.append(
      el(doc, "span", "suggestion-phrase", suggestion.phrase),
      el(doc, "span", "suggestion-name",
         suggestion.name === suggestion.phrase ? "" : suggestion.name),
    );
    item.addEventListener("click", () => onPick(suggestion));
    container.append(item);
  }
}

export function renderChips(
  container: HTMLElement,
  chips: Chip[],
  conflictIds: number[],
  handlers: { onToggle: (id: number) => void; onRemove: (id: number) => void },
): void {
  const doc = container.ownerDocument;
  container.textContent = "";
  for (const chip of chips) {
    const node = el(doc, "span",
      `chip ${chip.polarity}${conflictIds.includes(chip.id) ? " conflict" : ""}`);
    node.dataset.findingId = String(chip.id);
    const toggle = el(doc, "button", "chip-toggle",
      chip.polarity === "present" ? "+" : "−");
    toggle.type = "button";
    toggle.title = "toggle present/absent";
    toggle.addEventListener("click", () => handlers.onToggle(chip.id));
    const remove = el(doc, "button", "chip-remove", "×");
    remove.type = "button";
    remove.title = "remove";
    remove.addEventListener("click", () => handlers.onRemove(chip.id));
    node.append(toggle, el(doc, "span", "chip-name", chip.name), remove);
    container.append(node);
  }
}

export interface DifferentialHandlers {
  onWhatIf?: (finding: { id: number; name: string }, polarity: "present" | "absent") => void;
}

function renderEntry(
  doc: Document,
  entry: DifferentialEntry,
  rank: number,
  scale: "log" | "linear",
  handlers: DifferentialHandlers,
): HTMLElement {
  const row = el(doc, "li", "entry");
  row.dataset.disorderId = String(entry.disorder_id);

  const head = el(doc, "div", "entry-head");
  head.append(
    el(doc, "span", "entry-rank", String(rank)),
    el(doc, "span", "entry-name", entry.name),
    el(doc, "span", `badge ${CATEGORY_CLASS[entry.category] ?? "cat-other"}`,
       entry.category),
    el(doc, "span", "entry-posterior", entry.posterior.toExponential(3)),
  );

  const bar = el(doc, "div", "bar");
  const fill = el(doc, "div", "bar-fill");
  fill.style.width = `${barWidth(entry.posterior, scale).toFixed(2)}%`;
  bar.append(fill);

  row.append(head, bar);

  if (entry.processes.length) {
    row.append(el(doc, "div", "processes",
      `processes: ${entry.processes.join(", ")}`));
  }
  if (entry.suggested_tests.length) {
    const tests = el(doc, "div", "tests");
    tests.append(el(doc, "span", "tests-label", "confirm with:"));
    for (const test of entry.suggested_tests) {
      const chip = el(doc, "span", "test");
      chip.append(el(doc, "span", "test-name",
        `${test.name} (${test.weight.toFixed(2)})`));
      if (handlers.onWhatIf) {
        const yes = el(doc, "button", "test-whatif", "what if +");
        yes.type = "button";
        yes.addEventListener("click", () =>
          handlers.onWhatIf?.({ id: test.finding_id, name: test.name }, "present"));
        const no = el(doc, "button", "test-whatif", "what if −");
        no.type = "button";
        no.addEventListener("click", () =>
          handlers.onWhatIf?.({ id: test.finding_id, name: test.name }, "absent"));
        chip.append(yes, no);
      }
      tests.append(chip);
    }
    row.append(tests);
  }
  return row;
}

export function renderDifferential(
  container: HTMLElement,
  response: DiagnosisResponse | null,
  scale: "log" | "linear",
  handlers: DifferentialHandlers = {},
): void {
  const doc = container.ownerDocument;
  container.textContent = "";
  if (!response) {
    container.append(el(doc, "p", "placeholder",
      "add findings and press diagnose"));
    return;
  }
  const list = el(doc, "ol", "differential");
  response.differential.forEach((entry, index) => {
    list.append(renderEntry(doc, entry, index + 1, scale, handlers));
  });
  container.append(list);

  const diag = response.diagnostics;
  container.append(el(doc, "footer", "diagnostics",
    `log-evidence bound ${diag.bound.toFixed(4)} · exact set ` +
    `[${diag.exact_set.join(", ")}] · ${diag.iterations} sweeps · ` +
    `k=${diag.k} · kb ${diag.fingerprint.slice(0, 12)}`));
}

export function renderPreview(
  container: HTMLElement,
  state: SessionState,
  handlers: { onApply: () => void; onCancel: () => void },
): void {
  const doc = container.ownerDocument;
  container.textContent = "";
  if (!state.whatIf) {
    container.classList.add("hidden");
    return;
  }
  container.classList.remove("hidden");
  const { chip, preview } = state.whatIf;
  container.append(el(doc, "h3", "preview-title",
    `what if: ${chip.name} ${chip.polarity === "present" ? "present" : "absent"}`));

  const list = el(doc, "ol", "preview-list");
  for (const delta of rankDeltas(state.committed, preview)) {
    const row = el(doc, "li", `delta ${delta.movement}`);
    row.dataset.disorderId = String(delta.disorderId);
    const arrow = { up: "↑", down: "↓", same: "→", new: "★" }[delta.movement];
    const from = delta.previousRank === null ? "—" : `#${delta.previousRank}`;
    row.textContent =
      `${arrow} ${delta.name}: ${from} → #${delta.rank} ` +
      `(${delta.posterior.toExponential(2)})`;
    list.append(row);
  }
  container.append(list);

  const actions = el(doc, "div", "preview-actions");
  const apply = el(doc, "button", "apply", "apply");
  apply.type = "button";
  apply.addEventListener("click", handlers.onApply);
  const cancel = el(doc, "button", "cancel", "cancel");
  cancel.type = "button";
  cancel.addEventListener("click", handlers.onCancel);
  actions.append(apply, cancel);
  container.append(actions);
}

export function renderBanner(container: HTMLElement, banner: string | null): void {
  container.textContent = banner ?? "";
  container.classList.toggle("hidden", banner === null);
}

export function renderHistory(container: HTMLElement, state: SessionState): void {
  const doc = container.ownerDocument;
  container.textContent = "";
  state.history.forEach((entry, index) => {
    const chips = entry.chips
      .map((c) => `${c.polarity === "absent" ? "¬" : ""}${c.name}`)
      .join(", ");
    container.append(el(doc, "li", "history-entry",
      `#${index + 1} [${chips}] → ${entry.topDisorder ?? "(empty)"}`));
  });
}
