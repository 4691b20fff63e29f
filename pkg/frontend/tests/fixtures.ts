import type { DiagnosisResponse } from "../src/api.js";

export function makeResponse(
  entries: Array<[number, string, string, number]>,
  fingerprint = "abc123def456",
): DiagnosisResponse {
  return {
    differential: entries.map(([disorder_id, name, category, posterior]) => ({
      disorder_id,
      name,
      category,
      posterior,
      processes: [],
      suggested_tests: [
        { finding_id: 900 + disorder_id, name: `${name} assay`, weight: 0.81 },
      ],
    })),
    case: {
      positive: [],
      negative: [],
      demographics: { age: null, sex: null, nationality: null },
    },
    diagnostics: {
      bound: -4.2,
      exact_set: [],
      iterations: 3,
      k: 2,
      fingerprint,
    },
  };
}
