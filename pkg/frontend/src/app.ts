/**
 * Wires the session store, API client and renderers to the page.
 *
 * One diagnose request is in flight at a time; newer commits abort and
 * supersede older ones. Server errors land in the banner and never clear
 * entered chips.
 */

import { ApiClient, ApiError, type FindingSuggestion } from "./api.js";
import { exportCase } from "./casexml.js";
import {
  addChip,
  applyWhatIf,
  cancelWhatIf,
  clearChips,
  commit,
  evidenceOf,
  initialState,
  removeChip,
  setBanner,
  setConflicts,
  setWhatIf,
  togglePolarity,
  toggleScale,
  type Chip,
  type SessionState,
} from "./state.js";
import {
  renderBanner,
  renderChips,
  renderDifferential,
  renderHistory,
  renderPreview,
  renderSuggestions,
} from "./render.js";

const SEARCH_DEBOUNCE_MS = 200;

export class App {
  private state: SessionState = initialState();
  private searchTimer: ReturnType<typeof setTimeout> | null = null;
  private inflight: AbortController | null = null;

  constructor(
    private readonly doc: Document,
    private readonly api: ApiClient,
  ) {}

  private $(id: string): HTMLElement {
    const node = this.doc.getElementById(id);
    if (!node) throw new Error(`missing element #${id}`);
    return node;
  }

  start(): void {
    this.$("search").addEventListener("input", (event) => {
      const value = (event.target as HTMLInputElement).value;
      this.scheduleSearch(value);
    });
    this.$("diagnose").addEventListener("click", () => void this.commitFindings());
    this.$("clear").addEventListener("click", () => {
      this.update(clearChips(this.state));
    });
    this.$("export").addEventListener("click", () => this.exportCaseFile());
    this.$("scale-toggle").addEventListener("click", () => {
      this.update(toggleScale(this.state));
    });
    void this.loadHealth();
    this.render();
  }

  private update(next: SessionState): void {
    this.state = next;
    this.render();
  }

  private async loadHealth(): Promise<void> {
    try {
      const health = await this.api.health();
      this.$("health").textContent =
        `${health.disorders} disorders · ${health.findings} findings · ` +
        `${health.links} links · ${health.backend} kernels · ` +
        `kb ${health.fingerprint.slice(0, 12)}`;
    } catch {
      this.$("health").textContent = "service unreachable";
    }
  }

  private scheduleSearch(prefix: string): void {
    if (this.searchTimer) clearTimeout(this.searchTimer);
    this.searchTimer = setTimeout(() => void this.runSearch(prefix), SEARCH_DEBOUNCE_MS);
  }

  private async runSearch(prefix: string): Promise<void> {
    try {
      const suggestions = await this.api.searchFindings(prefix);
      renderSuggestions(this.$("suggestions"), suggestions, (s) => this.pick(s));
    } catch (error) {
      this.update(setBanner(this.state, this.describe(error)));
    }
  }

  private pick(suggestion: FindingSuggestion): void {
    const chip: Chip = { id: suggestion.id, name: suggestion.name, polarity: "present" };
    (this.$("search") as HTMLInputElement).value = "";
    this.$("suggestions").textContent = "";
    this.update(addChip(this.state, chip));
  }

  private describe(error: unknown): string {
    if (error instanceof ApiError) {
      return error.detail ? `${error.message}: ${error.detail}` : error.message;
    }
    return error instanceof Error ? error.message : String(error);
  }

  /** Extract finding ids named in a 422 conflict detail, for highlighting. */
  private conflictIdsFrom(error: unknown): number[] {
    if (!(error instanceof ApiError) || error.status !== 422) return [];
    return (error.detail.match(/\d+/g) ?? []).map(Number);
  }

  async commitFindings(): Promise<void> {
    // With no chips the server ranks by priors alone; the view shows that.
    const { positive, negative } = evidenceOf(this.state.chips);
    this.inflight?.abort();
    this.inflight = new AbortController();
    try {
      const { response, raw } = await this.api.diagnose(
        positive, negative, this.state.demographics, this.inflight.signal);
      this.update(commit(this.state, response, raw));
    } catch (error) {
      if (error instanceof DOMException && error.name === "AbortError") return;
      this.update(setConflicts(
        setBanner(this.state, this.describe(error)),
        this.conflictIdsFrom(error),
      ));
    }
  }

  async previewWhatIf(
    finding: { id: number; name: string },
    polarity: "present" | "absent",
  ): Promise<void> {
    if (this.state.chips.some((c) => c.id === finding.id)) return;  // already committed
    const chip: Chip = { id: finding.id, name: finding.name, polarity };
    const hypothetical = [...this.state.chips, chip];
    const { positive, negative } = evidenceOf(hypothetical);
    try {
      const { response, raw } = await this.api.diagnose(
        positive, negative, this.state.demographics);
      this.update(setWhatIf(this.state, chip, response, raw));
    } catch (error) {
      this.update(setBanner(this.state, this.describe(error)));
    }
  }

  private exportCaseFile(): void {
    const xml = exportCase(this.state.chips, this.state.demographics);
    const blob = new Blob([xml], { type: "application/xml" });
    const url = URL.createObjectURL(blob);
    const anchor = this.doc.createElement("a");
    anchor.href = url;
    anchor.download = "case.xml";
    anchor.click();
    URL.revokeObjectURL(url);
  }

  private render(): void {
    renderBanner(this.$("banner"), this.state.banner);
    renderChips(this.$("chips"), this.state.chips, this.state.conflictIds, {
      onToggle: (id) => this.update(togglePolarity(this.state, id)),
      onRemove: (id) => this.update(removeChip(this.state, id)),
    });
    renderDifferential(this.$("differential"), this.state.committed, this.state.scale, {
      onWhatIf: (finding, polarity) => void this.previewWhatIf(finding, polarity),
    });
    renderPreview(this.$("preview"), this.state, {
      onApply: () => this.update(applyWhatIf(this.state)),
      onCancel: () => this.update(cancelWhatIf(this.state)),
    });
    renderHistory(this.$("history"), this.state);
    this.$("scale-toggle").textContent =
      this.state.scale === "log" ? "scale: log" : "scale: linear";
  }

  /** Current immutable state. */
  get sessionState(): SessionState {
    return this.state;
  }

  /** Replace the whole session (used by tests and session restore). */
  restore(state: SessionState): void {
    this.update(state);
  }
}

export function mount(doc: Document, baseUrl = ""): App {
  const app = new App(doc, new ApiClient(baseUrl));
  app.start();
  return app;
}
