/** DOM wiring: connects the service client and the workbench state to the
 * page.  All table content and orderings come from the service payloads.
 */

import { ApiError, Client } from "./api.js";
import type { Job, ProjectInfo } from "./api.js";
import {
  contextsFor,
  emptyStateMessage,
  formatFor,
  knownCategories,
  Workbench,
} from "./viewmodel.js";
import type { SortKey } from "./viewmodel.js";
import { renderHeader, renderJob, renderRows, renderSnippets } from "./render.js";

const client = new Client("");
const wb = new Workbench();

let projectId = "";
let projectInfo: ProjectInfo | null = null;
let retryAction: (() => void) | null = null;
let filterTimer: number | undefined;

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

// -- error banner ----------------------------------------------------------

function showError(message: string, retry: (() => void) | null): void {
  retryAction = retry;
  el("error-text").textContent = message;
  el("error-banner").hidden = false;
  el("retry-btn").hidden = retry === null;
}

function clearError(): void {
  el<HTMLElement>("error-banner").hidden = true;
  retryAction = null;
}

function describeError(err: unknown): string {
  if (err instanceof ApiError) {
    if (err.unreachable) return "Service unreachable.";
    return err.field ? `${err.message} (${err.field})` : err.message;
  }
  return String(err);
}

// -- rendering -------------------------------------------------------------

function renderTable(): void {
  el("table-head").innerHTML = renderHeader(wb.sort);
  el("table-body").innerHTML = renderRows(wb.sortedRows(), wb.mode);
  const empty = projectInfo ? emptyStateMessage(projectInfo) : null;
  const emptyBox = el("empty-state");
  emptyBox.hidden = empty === null || wb.rows().length > 0;
  emptyBox.textContent = empty ?? "";
  renderPager();
  renderSessionBar();
  updateExpandGate();
}

function renderPager(): void {
  const pager = el("pager");
  if (wb.mode === "session" || !wb.page) {
    pager.hidden = true;
    return;
  }
  pager.hidden = false;
  const { total, offset, limit, groups } = wb.page;
  el("pager-info").textContent =
    total === 0
      ? "no groups"
      : `${offset + 1}–${offset + groups.length} of ${total}`;
  el<HTMLButtonElement>("prev-btn").disabled = offset === 0;
  el<HTMLButtonElement>("next-btn").disabled = offset + limit >= total;
}

function renderSessionBar(): void {
  const inSession = wb.mode === "session" && wb.session !== null;
  el("session-tools").hidden = !inSession;
  el<HTMLButtonElement>("browse-btn").hidden = !inSession;
  if (inSession && wb.session) {
    el("scorer-line").textContent =
      `session ${wb.session.session_id} · ${wb.session.category} · ` +
      `scorer: ${wb.session.scorer}`;
    const link = el<HTMLAnchorElement>("download-link");
    link.href = client.exportCsvUrl(projectId, wb.session.session_id);
  }
}

function updateExpandGate(): void {
  const gate = wb.canExpand();
  const button = el<HTMLButtonElement>("expand-btn");
  button.disabled = !gate.ok;
  button.title = gate.ok ? "" : gate.reason;
}

function renderJobPanel(job: Job | null): void {
  const panel = el("job-panel");
  panel.hidden = job === null;
  panel.innerHTML = job ? renderJob(job) : "";
}

// -- data loading ----------------------------------------------------------

async function refreshProject(): Promise<void> {
  projectInfo = await client.getProject(projectId);
  el("project-line").textContent =
    `${projectInfo.name} (${projectInfo.id}) · ` +
    `${projectInfo.group_count} groups · ` +
    (projectInfo.trained_contexts.length
      ? `trained: ${projectInfo.trained_contexts.join(", ")}`
      : "untrained");
}

async function loadGroups(offset = 0): Promise<void> {
  const page = await client.groups(projectId, {
    filter: wb.filter,
    offset,
    limit: 50,
  });
  wb.applyGroups(page);
  renderTable();
}

async function loadSessions(): Promise<void> {
  const { sessions } = await client.listSessions(projectId);
  const select = el<HTMLSelectElement>("session-select");
  const current = select.value;
  select.innerHTML =
    `<option value="">sessions…</option>` +
    sessions
      .map((s) => `<option value="${s.id}">${s.id} ${s.category}</option>`)
      .join("");
  select.value = current;
  const list = el<HTMLDataListElement>("categories");
  list.innerHTML = knownCategories(sessions)
    .map((c) => `<option value="${c.replace(/"/g, "&quot;")}"></option>`)
    .join("");
}

function guarded(action: () => Promise<void>): void {
  action().then(clearError, (err) => {
    showError(describeError(err), () => guarded(action));
  });
}

// -- jobs ------------------------------------------------------------------

function pollJob(jid: string, onDone: () => void): void {
  const tick = async (): Promise<void> => {
    const job = await client.getJob(projectId, jid);
    renderJobPanel(job);
    if (job.state === "done") {
      wb.trainingActive = false;
      renderJobPanel(null);
      onDone();
      return;
    }
    if (job.state === "failed") {
      wb.trainingActive = false;
      updateExpandGate();
      showError(`${job.kind} failed: ${job.message}`, null);
      return;
    }
    window.setTimeout(() => guarded(tick), 400);
  };
  guarded(tick);
}

// -- actions ---------------------------------------------------------------

async function expandAction(): Promise<void> {
  const payload = await client.expand(
    projectId,
    wb.category.trim(),
    wb.seedIds(),
  );
  wb.applySession(payload);
  await loadSessions();
  await refreshProject();
  renderTable();
}

async function reexpandAction(): Promise<void> {
  if (!wb.session) return;
  const payload = await client.reexpand(
    projectId,
    wb.session.session_id,
    wb.acceptedIds(),
  );
  wb.applySession(payload);
  renderTable();
}

async function saveAction(): Promise<void> {
  if (!wb.session) return;
  if (wb.acceptedIds().length === 0) {
    const go = window.confirm(
      "No rows are marked completed. Save an empty validated set?",
    );
    if (!go) return;
  }
  const result = await client.saveSession(projectId, wb.session.session_id);
  wb.markSaved();
  el("save-line").textContent =
    `saved ${result.rows} row(s) to ${result.file}`;
}

function validateAction(gid: number, completed: boolean): void {
  if (!wb.session) return;
  wb.markCompleted(gid, completed);
  renderTable();
  const sid = wb.session.session_id;
  client.validate(projectId, sid, gid, completed).then(
    (payload) => {
      wb.confirmValidation(payload, gid);
      renderTable();
      clearError();
    },
    (err) => {
      wb.rollbackCompleted(gid);
      renderTable();
      showError(describeError(err), null);
    },
  );
}

async function trainAction(): Promise<void> {
  const contexts = contextsFor(projectInfo?.corpus?.parsed ?? false);
  const job = await client.train(
    projectId,
    contexts ? { contexts } : {},
  );
  wb.trainingActive = true;
  updateExpandGate();
  renderJobPanel(job);
  pollJob(job.id, () => {
    guarded(async () => {
      await refreshProject();
      await loadGroups();
    });
  });
}

async function uploadAction(file: File): Promise<void> {
  const job = await client.uploadCorpus(projectId, file, formatFor(file.name));
  renderJobPanel(job);
  pollJob(job.id, () => {
    guarded(refreshProject);
    renderTable();
  });
}

// -- event wiring ----------------------------------------------------------

function wireEvents(): void {
  el("filter").addEventListener("input", (ev) => {
    wb.filter = (ev.target as HTMLInputElement).value;
    window.clearTimeout(filterTimer);
    filterTimer = window.setTimeout(() => {
      wb.backToBrowse();
      guarded(() => loadGroups());
    }, 200);
  });

  el("table-head").addEventListener("click", (ev) => {
    const th = (ev.target as HTMLElement).closest<HTMLElement>("th.sortable");
    if (!th) return;
    wb.toggleSort(th.dataset.sort as SortKey);
    renderTable();
  });

  el("table-body").addEventListener("change", (ev) => {
    const box = ev.target as HTMLInputElement;
    const gid = Number(box.dataset.gid);
    if (box.classList.contains("expand-box")) {
      wb.toggleSeed(gid);
      updateExpandGate();
    } else if (box.classList.contains("completed-box")) {
      validateAction(gid, box.checked);
    }
  });

  el("table-body").addEventListener("click", (ev) => {
    const target = ev.target as HTMLElement;
    if (target instanceof HTMLInputElement) return;
    const tr = target.closest<HTMLElement>("tr[data-gid]");
    if (!tr) return;
    const gid = Number(tr.dataset.gid);
    guarded(async () => {
      const payload = await client.snippets(projectId, gid);
      el("snippets").innerHTML = renderSnippets(payload);
    });
  });

  el("category").addEventListener("input", (ev) => {
    wb.setCategory((ev.target as HTMLInputElement).value);
    updateExpandGate();
  });

  el("expand-btn").addEventListener("click", () => guarded(expandAction));
  el("reexpand-btn").addEventListener("click", () => guarded(reexpandAction));
  el("save-btn").addEventListener("click", () => guarded(saveAction));
  el("browse-btn").addEventListener("click", () => {
    wb.backToBrowse();
    renderTable();
  });

  el<HTMLSelectElement>("session-select").addEventListener("change", (ev) => {
    const sid = (ev.target as HTMLSelectElement).value;
    if (!sid) return;
    guarded(async () => {
      const payload = await client.getSession(projectId, sid);
      wb.applySession(payload);
      wb.setCategory(payload.category);
      el<HTMLInputElement>("category").value = payload.category;
      renderTable();
    });
  });

  el("prev-btn").addEventListener("click", () => {
    if (wb.page) {
      const target = Math.max(0, wb.page.offset - wb.page.limit);
      guarded(() => loadGroups(target));
    }
  });
  el("next-btn").addEventListener("click", () => {
    if (wb.page) {
      const target = wb.page.offset + wb.page.limit;
      guarded(() => loadGroups(target));
    }
  });

  el("train-btn").addEventListener("click", () => guarded(trainAction));
  el<HTMLInputElement>("upload-input").addEventListener("change", (ev) => {
    const input = ev.target as HTMLInputElement;
    const file = input.files?.[0];
    if (file) guarded(() => uploadAction(file));
    input.value = "";
  });

  el("retry-btn").addEventListener("click", () => {
    const action = retryAction;
    clearError();
    action?.();
  });

  window.addEventListener("beforeunload", (ev) => {
    if (wb.dirty) ev.preventDefault();
  });
}

// -- boot ------------------------------------------------------------------

async function pickProject(): Promise<string> {
  const { projects } = await client.listProjects();
  if (projects.length > 0) return projects[0].id;
  const created = await client.createProject("workbench");
  return created.id;
}

function boot(): void {
  wireEvents();
  guarded(async () => {
    await client.status();
    projectId = await pickProject();
    await refreshProject();
    await loadGroups();
    await loadSessions();
    renderTable();
  });
}

boot();
