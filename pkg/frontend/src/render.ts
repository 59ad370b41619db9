/** HTML fragment builders: pure string-in, string-out, fully escaped. */

import type { Job, Snippet, SnippetsPayload } from "./api.js";
import type { Row, SortKey, SortSpec, ViewMode } from "./viewmodel.js";

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;")
    .replace(/'/g, "&#39;");
}

export function formatCertainty(value: number | null): string {
  return value === null ? "" : value.toFixed(4);
}

const HEADERS: { key: SortKey | null; label: string }[] = [
  { key: "expression", label: "Expression" },
  { key: "frequency", label: "Frequency" },
  { key: null, label: "Expand" },
  { key: null, label: "Completed" },
  { key: "certainty", label: "Certainty" },
];

export function renderHeader(sort: SortSpec | null): string {
  const cells = HEADERS.map(({ key, label }) => {
    if (!key) return `<th>${label}</th>`;
    const arrow =
      sort?.key === key ? (sort.dir === 1 ? " ▲" : " ▼") : "";
    return `<th class="sortable" data-sort="${key}">${label}${arrow}</th>`;
  });
  return `<tr>${cells.join("")}</tr>`;
}

export function renderRow(row: Row, mode: ViewMode): string {
  const classes = [
    row.seed ? "seed-row" : "",
    row.expanded ? "expanded-row" : "",
  ]
    .filter(Boolean)
    .join(" ");
  const expandBox =
    `<input type="checkbox" class="expand-box" data-gid="${row.id}"` +
    `${row.expandChecked ? " checked" : ""}${mode === "session" ? " disabled" : ""}>`;
  const completedBox =
    `<input type="checkbox" class="completed-box" data-gid="${row.id}"` +
    `${row.completedChecked ? " checked" : ""}${mode === "browse" ? " disabled" : ""}>`;
  const freq = row.frequency === null ? "" : String(row.frequency);
  return (
    `<tr data-gid="${row.id}"${classes ? ` class="${classes}"` : ""}>` +
    `<td class="expression">${escapeHtml(row.expression)}</td>` +
    `<td class="num">${freq}</td>` +
    `<td class="check">${expandBox}</td>` +
    `<td class="check">${completedBox}</td>` +
    `<td class="num">${formatCertainty(row.certainty)}</td>` +
    `</tr>`
  );
}

export function renderRows(rows: Row[], mode: ViewMode): string {
  return rows.map((r) => renderRow(r, mode)).join("");
}

/** Wrap the highlighted spans of a snippet in <mark>, escaping everything. */
export function highlightSnippet(
  text: string,
  spans: [number, number][],
): string {
  const ordered = [...spans].sort((a, b) => a[0] - b[0]);
  let out = "";
  let pos = 0;
  for (const [start, end] of ordered) {
    const from = Math.max(pos, start);
    const to = Math.min(text.length, end);
    if (to <= from) continue;
    out += escapeHtml(text.slice(pos, from));
    out += `<mark>${escapeHtml(text.slice(from, to))}</mark>`;
    pos = to;
  }
  return out + escapeHtml(text.slice(pos));
}

export function renderSnippets(payload: SnippetsPayload): string {
  if (payload.snippets.length === 0) {
    return `<p class="muted">No snippets for ${escapeHtml(payload.canonical)}.</p>`;
  }
  const items = payload.snippets
    .map(
      (s: Snippet) =>
        `<li>${highlightSnippet(s.text, s.highlights)}</li>`,
    )
    .join("");
  return (
    `<h3>Snippets for ${escapeHtml(payload.canonical)}</h3>` +
    `<ul class="snippets">${items}</ul>`
  );
}

export function renderJob(job: Job): string {
  const pct = Math.round(job.progress * 100);
  return (
    `<div class="job job-${job.state}">` +
    `<span class="job-kind">${escapeHtml(job.kind)}</span> ` +
    `<span class="job-state">${job.state}</span>` +
    `<div class="bar"><div class="bar-fill" style="width:${pct}%"></div></div>` +
    `<span class="job-message">${escapeHtml(job.message)}</span>` +
    `</div>`
  );
}
