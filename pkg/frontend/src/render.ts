import type { AgreementPayload, Progress, ReviewItem } from "./types.js";

/** Pure HTML-string renderers: no DOM, no network, fully unit-testable.
 * Every number rendered is passed through verbatim from an API payload
 * (via String()); the client never computes a metric itself. */

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;")
    .replace(/'/g, "&#39;");
}

export function renderTranscript(item: ReviewItem): string {
  const lines = item.context.map(
    (m) =>
      `<div class="msg msg-${m.speaker}"><span class="speaker">${m.speaker.toUpperCase()}</span> ` +
      `<span class="text">${escapeHtml(m.text)}</span></div>`,
  );
  const t = item.target;
  lines.push(
    `<div class="msg msg-${t.speaker} msg-target"><span class="speaker">${t.speaker.toUpperCase()}</span> ` +
      `<span class="text">${escapeHtml(t.text)}</span></div>`,
  );
  return `<div class="transcript">${lines.join("")}</div>`;
}

export function renderPrediction(item: ReviewItem): string {
  const verdict = item.model_prediction ? "yes" : "no";
  return (
    `<div class="prediction prediction-${verdict}">` +
    `<span class="behavior" title="${escapeHtml(item.behavior_description)}">` +
    `${escapeHtml(item.behavior_name)}</span>` +
    `<span class="badge">${verdict.toUpperCase()}</span></div>`
  );
}

export function renderProgress(progress: Progress): string {
  return (
    `<div class="progress" data-rated="${progress.rated}" data-total="${progress.total}">` +
    `${progress.rated}/${progress.total} (${String(progress.percent)}%)</div>`
  );
}

const PAIR_COLUMNS: [string, string][] = [
  ["RATER1/RATER2", "R1 / R2"],
  ["RATER1/MODEL", "R1 / Model"],
  ["RATER2/MODEL", "R2 / Model"],
];

function cell(
  primary: Record<string, number>,
  alternate: Record<string, number> | undefined,
  pair: string,
): string {
  const value = primary[pair];
  if (value === undefined) return `<td class="kappa" data-pair="${pair}"></td>`;
  const alt = alternate?.[pair];
  // verbatim pass-through of API values; the parenthesized figure is the
  // alternate uncertain-policy result
  const altText =
    alt !== undefined && alt !== value ? ` (${String(alt)})` : "";
  return (
    `<td class="kappa" data-pair="${pair}" data-value="${String(value)}">` +
    `${String(value)}${altText}</td>`
  );
}

/** Per-behavior pairwise-kappa table plus a pooled Total row, with the
 * alternate-policy payload's values in parentheses where they differ. */
export function renderKappaTable(
  primary: AgreementPayload,
  alternate?: AgreementPayload,
  behaviorNames?: Record<string, string>,
): string {
  const header =
    "<tr><th>Behavior</th>" +
    PAIR_COLUMNS.map(([, label]) => `<th>${label}</th>`).join("") +
    "</tr>";
  const rows = Object.keys(primary.per_behavior).map((behavior) => {
    const name = behaviorNames?.[behavior] ?? behavior;
    const cells = PAIR_COLUMNS.map(([pair]) =>
      cell(primary.per_behavior[behavior], alternate?.per_behavior?.[behavior], pair),
    ).join("");
    return `<tr data-behavior="${escapeHtml(behavior)}"><td>${escapeHtml(name)}</td>${cells}</tr>`;
  });
  const totalCells = PAIR_COLUMNS.map(([pair]) =>
    cell(primary.total, alternate?.total, pair),
  ).join("");
  rows.push(`<tr class="total" data-behavior="__total__"><td>Total</td>${totalCells}</tr>`);
  return (
    `<table class="kappa-table" data-policy="${primary.policy}" ` +
    `data-overall="${String(primary.overall)}">` +
    `<thead>${header}</thead><tbody>${rows.join("")}</tbody></table>`
  );
}

export function renderEmptyAgreement(): string {
  return '<div class="empty-state">No ratings yet — rate an item to see agreement.</div>';
}

export function renderComplete(progress: Progress | null): string {
  const n = progress ? `${progress.rated}/${progress.total}` : "";
  return `<div class="complete">Session complete ${n}</div>`;
}
