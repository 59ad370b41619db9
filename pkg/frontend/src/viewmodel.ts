/** Pure workbench state: seed assembly, result merging, validation flags.
 *
 * No DOM and no network; app.ts feeds API payloads in and renders the rows
 * out.  Orderings are the service's orderings: browse rows follow the
 * groups page, session rows follow the expansion payload, and the optional
 * user sort is always reversible back to that order.
 */

import type {
  GroupsPage,
  ProjectInfo,
  SessionPayload,
  SessionSummary,
} from "./api.js";

export type ViewMode = "browse" | "session";
export type SortKey = "expression" | "frequency" | "certainty";

export interface SortSpec {
  key: SortKey;
  dir: 1 | -1;
}

/** One table row, ready to render. */
export interface Row {
  id: number;
  expression: string;
  frequency: number | null;
  certainty: number | null;
  seed: boolean;
  expanded: boolean;
  expandChecked: boolean;
  completedChecked: boolean;
}

export type Gate = { ok: true } | { ok: false; reason: string };

export class Workbench {
  mode: ViewMode = "browse";
  page: GroupsPage | null = null;
  session: SessionPayload | null = null;
  category = "";
  filter = "";
  trainingActive = false;
  /** Validated rows changed since the last save. */
  dirty = false;
  sort: SortSpec | null = null;

  private seedChecks = new Set<number>();
  private frequencies = new Map<number, number>();
  /** Optimistic completed toggles not yet confirmed by the service. */
  private overrides = new Map<number, boolean>();

  // -- loading API payloads ------------------------------------------------

  applyGroups(page: GroupsPage): void {
    this.page = page;
    for (const g of page.groups) this.frequencies.set(g.id, g.frequency);
  }

  /** A fresh expansion/re-expansion result replaces the session view. */
  applySession(payload: SessionPayload): void {
    this.session = payload;
    this.mode = "session";
    this.overrides.clear();
  }

  /** Service confirmation of a toggle: adopt the payload, drop the override. */
  confirmValidation(payload: SessionPayload, groupId: number): void {
    this.session = payload;
    this.overrides.delete(groupId);
  }

  backToBrowse(): void {
    this.mode = "browse";
  }

  // -- seed assembly -------------------------------------------------------

  toggleSeed(groupId: number): boolean {
    if (this.seedChecks.has(groupId)) {
      this.seedChecks.delete(groupId);
      return false;
    }
    this.seedChecks.add(groupId);
    return true;
  }

  clearSeeds(): void {
    this.seedChecks.clear();
  }

  seedIds(): number[] {
    return [...this.seedChecks].sort((a, b) => a - b);
  }

  setCategory(name: string): void {
    this.category = name;
  }

  /** Whether the Expand action is allowed, with the reason when it is not. */
  canExpand(): Gate {
    if (this.trainingActive) {
      return { ok: false, reason: "training is running" };
    }
    if (!this.category.trim()) {
      return { ok: false, reason: "name a category first" };
    }
    if (this.seedChecks.size === 0) {
      return { ok: false, reason: "tick at least one Expand box" };
    }
    return { ok: true };
  }

  // -- validation ----------------------------------------------------------

  completedOf(groupId: number): boolean {
    const override = this.overrides.get(groupId);
    if (override !== undefined) return override;
    const item = this.session?.items.find((i) => i.group_id === groupId);
    return item?.completed ?? false;
  }

  /** Optimistic toggle; the service call confirms or rolls it back. */
  markCompleted(groupId: number, completed: boolean): void {
    this.overrides.set(groupId, completed);
    this.dirty = true;
  }

  rollbackCompleted(groupId: number): void {
    this.overrides.delete(groupId);
  }

  /** Completed-checked group ids, in session order. */
  acceptedIds(): number[] {
    if (!this.session) return [];
    return this.session.items
      .filter((i) => this.completedOf(i.group_id))
      .map((i) => i.group_id);
  }

  markSaved(): void {
    this.dirty = false;
  }

  // -- table rows ----------------------------------------------------------

  private certaintyOf(groupId: number): number | null {
    const item = this.session?.items.find((i) => i.group_id === groupId);
    return item ? item.certainty : null;
  }

  private seedOf(groupId: number): boolean {
    const item = this.session?.items.find((i) => i.group_id === groupId);
    return item?.seed ?? false;
  }

  /** Rows in the service's order for the current view. */
  rows(): Row[] {
    if (this.mode === "session" && this.session) {
      return this.session.items.map((i) => ({
        id: i.group_id,
        expression: i.canonical,
        frequency: this.frequencies.get(i.group_id) ?? null,
        certainty: i.certainty,
        seed: i.seed,
        expanded: !i.seed,
        expandChecked: this.seedChecks.has(i.group_id),
        completedChecked: this.completedOf(i.group_id),
      }));
    }
    if (!this.page) return [];
    return this.page.groups.map((g) => ({
      id: g.id,
      expression: g.canonical,
      frequency: g.frequency,
      certainty: this.certaintyOf(g.id),
      seed: this.seedOf(g.id),
      expanded: false,
      expandChecked: this.seedChecks.has(g.id),
      completedChecked: this.completedOf(g.id),
    }));
  }

  /** Cycle a column sort: ascending, descending, back to service order. */
  toggleSort(key: SortKey): void {
    if (this.sort?.key !== key) {
      this.sort = { key, dir: 1 };
    } else if (this.sort.dir === 1) {
      this.sort = { key, dir: -1 };
    } else {
      this.sort = null;
    }
  }

  /** rows() with the user sort applied; null sort is the service order. */
  sortedRows(): Row[] {
    const rows = this.rows();
    const sort = this.sort;
    if (!sort) return rows;
    const value = (r: Row): string | number | null =>
      sort.key === "expression" ? r.expression : r[sort.key];
    return [...rows].sort((a, b) => {
      const va = value(a);
      const vb = value(b);
      if (va === null && vb === null) return 0;
      if (va === null) return 1; // blanks sink regardless of direction
      if (vb === null) return -1;
      if (typeof va === "string" && typeof vb === "string") {
        return sort.dir * va.localeCompare(vb);
      }
      return sort.dir * (Number(va) - Number(vb));
    });
  }
}

/** Context families worth training for a corpus; null means server default. */
export function contextsFor(parsed: boolean): string[] | null {
  if (parsed) return ["linear", "list", "dependency", "symmetric", "unary"];
  return null;
}

/** Corpus format implied by an uploaded file's name. */
export function formatFor(filename: string): "text" | "conllu" {
  return /\.conllu$/i.test(filename) ? "conllu" : "text";
}

/** Distinct category names for the combo box, newest last. */
export function knownCategories(sessions: SessionSummary[]): string[] {
  const seen = new Set<string>();
  for (const s of sessions) seen.add(s.category);
  return [...seen];
}

/** What to prompt for when the table has nothing to show. */
export function emptyStateMessage(info: ProjectInfo): string | null {
  if (!info.corpus) return "Upload a corpus to begin.";
  if (info.trained_contexts.length === 0) {
    return "Corpus ingested. Train models to browse term groups.";
  }
  if (info.group_count === 0) return "Training produced no term groups.";
  return null;
}
