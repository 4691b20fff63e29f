/**
 * Session state and the pure transitions the UI is built on.
 *
 * The committed differential only ever changes in commit/apply; what-if
 * previews live alongside it and never touch committed data. All functions
 * here are pure so the invariants are directly unit-testable.
 */

import type { DiagnosisResponse, Demographics } from "./api.js";

export type Polarity = "present" | "absent";

export interface Chip {
  id: number;
  name: string;
  polarity: Polarity;
}

export interface WhatIf {
  chip: Chip;
  preview: DiagnosisResponse;
  previewRaw: string;
}

export interface HistoryEntry {
  chips: Chip[];
  fingerprint: string;
  topDisorder: string | null;
}

export interface SessionState {
  chips: Chip[];
  demographics: Demographics;
  committed: DiagnosisResponse | null;
  committedRaw: string | null;
  whatIf: WhatIf | null;
  history: HistoryEntry[];
  banner: string | null;
  conflictIds: number[];
  scale: "log" | "linear";
}

export function initialState(): SessionState {
  return {
    chips: [],
    demographics: {},
    committed: null,
    committedRaw: null,
    whatIf: null,
    history: [],
    banner: null,
    conflictIds: [],
    scale: "log",
  };
}

/** Adding a chip that is already present (same id) is a no-op. */
export function addChip(state: SessionState, chip: Chip): SessionState {
  if (state.chips.some((c) => c.id === chip.id)) return state;
  return { ...state, chips: [...state.chips, chip], conflictIds: [] };
}

export function removeChip(state: SessionState, id: number): SessionState {
  return { ...state, chips: state.chips.filter((c) => c.id !== id), conflictIds: [] };
}

export function togglePolarity(state: SessionState, id: number): SessionState {
  return {
    ...state,
    conflictIds: [],
    chips: state.chips.map((c) =>
      c.id === id
        ? { ...c, polarity: c.polarity === "present" ? "absent" : "present" }
        : c,
    ),
  };
}

export function clearChips(state: SessionState): SessionState {
  return { ...state, chips: [], whatIf: null, conflictIds: [] };
}

/** Sorted id lists for the diagnose payload. */
export function evidenceOf(chips: Chip[]): { positive: number[]; negative: number[] } {
  const positive = chips.filter((c) => c.polarity === "present").map((c) => c.id);
  const negative = chips.filter((c) => c.polarity === "absent").map((c) => c.id);
  positive.sort((a, b) => a - b);
  negative.sort((a, b) => a - b);
  return { positive, negative };
}

/** Commit replaces the differential atomically and records history. */
export function commit(
  state: SessionState,
  response: DiagnosisResponse,
  raw: string,
): SessionState {
  const entry: HistoryEntry = {
    chips: state.chips.map((c) => ({ ...c })),
    fingerprint: response.diagnostics.fingerprint,
    topDisorder: response.differential[0]?.name ?? null,
  };
  return {
    ...state,
    committed: response,
    committedRaw: raw,
    whatIf: null,
    banner: null,
    conflictIds: [],
    history: [...state.history, entry],
  };
}

export function setWhatIf(
  state: SessionState,
  chip: Chip,
  preview: DiagnosisResponse,
  previewRaw: string,
): SessionState {
  return { ...state, whatIf: { chip, preview, previewRaw } };
}

export function cancelWhatIf(state: SessionState): SessionState {
  return { ...state, whatIf: null };
}

/** Promote the previewed hypothesis: its response becomes the committed view. */
export function applyWhatIf(state: SessionState): SessionState {
  if (!state.whatIf) return state;
  const { chip, preview, previewRaw } = state.whatIf;
  const withChip = addChip(state, chip);
  return commit({ ...withChip, whatIf: null }, preview, previewRaw);
}

export function setBanner(state: SessionState, banner: string | null): SessionState {
  return { ...state, banner };
}

export function setConflicts(state: SessionState, ids: number[]): SessionState {
  return { ...state, conflictIds: ids };
}

export function toggleScale(state: SessionState): SessionState {
  return { ...state, scale: state.scale === "log" ? "linear" : "log" };
}

/** 1-based rank of each disorder in a server response (response order). */
export function ranksOf(response: DiagnosisResponse): Map<number, number> {
  const ranks = new Map<number, number>();
  response.differential.forEach((entry, index) => {
    ranks.set(entry.disorder_id, index + 1);
  });
  return ranks;
}

export interface RankDelta {
  disorderId: number;
  name: string;
  rank: number;
  previousRank: number | null;
  posterior: number;
  movement: "up" | "down" | "same" | "new";
}

/** Per-entry rank movement of the preview relative to the committed view. */
export function rankDeltas(
  committed: DiagnosisResponse | null,
  preview: DiagnosisResponse,
): RankDelta[] {
  const before = committed ? ranksOf(committed) : new Map<number, number>();
  return preview.differential.map((entry, index) => {
    const rank = index + 1;
    const previousRank = before.get(entry.disorder_id) ?? null;
    let movement: RankDelta["movement"];
    if (previousRank === null) movement = "new";
    else if (rank < previousRank) movement = "up";
    else if (rank > previousRank) movement = "down";
    else movement = "same";
    return {
      disorderId: entry.disorder_id,
      name: entry.name,
      rank,
      previousRank,
      posterior: entry.posterior,
      movement,
    };
  });
}

/**
 * Bar width in percent. Posteriors span orders of magnitude, so the default
 * scale is logarithmic over [floor, 1]; the linear toggle maps [0, 1]
 * directly. Width is monotone in the posterior under both scales.
 */
export function barWidth(
  posterior: number,
  scale: "log" | "linear",
  floor = 1e-6,
): number {
  if (scale === "linear") return Math.max(0, Math.min(1, posterior)) * 100;
  const clamped = Math.max(floor, Math.min(1, posterior));
  return ((Math.log10(clamped) - Math.log10(floor)) / -Math.log10(floor)) * 100;
}
