/**
 * Case XML export matching the service's intake schema:
 * <case> with <finding id polarity/>, optional <age>, <sex>, <nationality>.
 * Re-submitting an exported document reproduces the same differential.
 */

import type { Demographics } from "./api.js";
import type { Chip } from "./state.js";

function escapeXml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;")
    .replace(/'/g, "&apos;");
}

export function exportCase(chips: Chip[], demographics: Demographics = {}): string {
  const findings = [...chips].sort((a, b) => a.id - b.id);
  const lines: string[] = [];
  for (const chip of findings) {
    lines.push(`  <finding id="${chip.id}" polarity="${chip.polarity}"/>`);
  }
  if (demographics.age != null) lines.push(`  <age>${demographics.age}</age>`);
  if (demographics.sex) lines.push(`  <sex>${escapeXml(demographics.sex)}</sex>`);
  if (demographics.nationality) {
    lines.push(`  <nationality>${escapeXml(demographics.nationality)}</nationality>`);
  }
  if (!lines.length) return "<case/>\n";
  return `<case>\n${lines.join("\n")}\n</case>\n`;
}

/** Parse an exported document back into chips (names resolved elsewhere). */
export function parseCaseXml(xml: string): {
  findings: { id: number; polarity: "present" | "absent" }[];
  demographics: Demographics;
} {
  const findings: { id: number; polarity: "present" | "absent" }[] = [];
  const findingRe = /<finding\s+id="(\d+)"\s+polarity="(present|absent)"\s*\/>/g;
  let match: RegExpExecArray | null;
  while ((match = findingRe.exec(xml)) !== null) {
    findings.push({ id: Number(match[1]), polarity: match[2] as "present" | "absent" });
  }
  const demographics: Demographics = {};
  const age = /<age>(\d+)<\/age>/.exec(xml);
  if (age) demographics.age = Number(age[1]);
  const sex = /<sex>([^<]*)<\/sex>/.exec(xml);
  if (sex) demographics.sex = sex[1];
  const nationality = /<nationality>([^<]*)<\/nationality>/.exec(xml);
  if (nationality) demographics.nationality = nationality[1];
  return { findings, demographics };
}
