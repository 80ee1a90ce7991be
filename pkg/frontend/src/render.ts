/**
 * DOM rendering: model cards, the add-by-id dialog, job progress, results.
 *
 * Renderers are plain functions from state to elements so they stay
 * testable against a mocked API; no model execution logic lives here.
 */

import { ApiClient, CuratedRow, InstalledModel, JobRecord } from "./api.js";
import { LabelRow, LabelSortKey, parseLabelText, sortLabelRows } from "./labels.js";
import { ManagerStore } from "./state.js";
import { decodeWav, drawWaveform, peaks } from "./wav.js";

export const EXPLORE_MODELS_URL = "https://huggingface.co/models?filter=audacity";

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

function domainBadges(domains: string[]): HTMLElement {
  const wrap = el("span", "badges");
  for (const domain of domains) {
    wrap.appendChild(el("span", "badge", domain));
  }
  return wrap;
}

// --- browse view ---------------------------------------------------------

export function renderCuratedList(
  container: HTMLElement,
  rows: CuratedRow[],
  onInstall: (repoId: string) => void,
): void {
  container.replaceChildren();

  const toolbar = el("div", "toolbar");
  const explore = el("a", "explore-link", "Explore models");
  explore.setAttribute("href", EXPLORE_MODELS_URL);
  explore.setAttribute("target", "_blank");
  explore.setAttribute("rel", "noopener");
  toolbar.appendChild(explore);
  container.appendChild(toolbar);

  if (rows.length === 0) {
    container.appendChild(el("p", "empty", "No curated models configured."));
    return;
  }
  const list = el("div", "card-list");
  for (const row of rows) {
    const [namespace, name] = row.repo_id.split("/");
    const card = el("div", "model-card");
    card.dataset.repoId = row.repo_id;

    const title = el("div", "card-title");
    title.appendChild(el("span", "model-name", name ?? row.repo_id));
    title.appendChild(el("span", "model-author", namespace ?? ""));
    card.appendChild(title);

    if (row.metadata) {
      card.appendChild(el("p", "card-desc", row.metadata.short_description));
      card.appendChild(domainBadges(row.metadata.domains));
    } else if (row.note) {
      card.appendChild(el("p", "card-desc", row.note));
    }

    if (row.installed) {
      const state = el("span", "install-state installed", "installed");
      card.appendChild(state);
    } else {
      const button = el("button", "install-button", "Install");
      button.addEventListener("click", () => onInstall(row.repo_id));
      card.appendChild(button);
    }
    list.appendChild(card);
  }
  container.appendChild(list);
}

export function renderInstalledList(
  container: HTMLElement,
  models: InstalledModel[],
  onUninstall: (repoId: string) => void,
): void {
  container.replaceChildren();
  if (models.length === 0) {
    container.appendChild(el("p", "empty", "Nothing installed yet."));
    return;
  }
  const list = el("div", "card-list");
  for (const model of models) {
    const card = el("div", "model-card installed-card");
    card.dataset.repoId = model.repo_id;
    card.appendChild(el("span", "model-name", model.repo_id));
    card.appendChild(
      el("span", "model-kind", model.metadata.effect_type === "waveform-to-labels" ? "analyzer" : "effect"),
    );
    card.appendChild(el("p", "card-desc", model.metadata.short_description));
    const remove = el("button", "uninstall-button", "Uninstall");
    remove.addEventListener("click", () => onUninstall(model.repo_id));
    card.appendChild(remove);
    list.appendChild(card);
  }
  container.appendChild(list);
}

// --- add-from-id dialog ------------------------------------------------------

export function renderAddDialog(container: HTMLElement, store: ManagerStore): void {
  container.replaceChildren();
  const dialog = el("div", "add-dialog");
  dialog.appendChild(el("h3", undefined, "Add model by repo ID"));

  const input = el("input", "repo-input") as HTMLInputElement;
  input.type = "text";
  input.placeholder = "namespace/name";
  input.value = store.addDialog.value;
  input.addEventListener("input", () => store.setAddDialogValue(input.value));
  dialog.appendChild(input);

  const button = el("button", "add-button", "Add");
  button.addEventListener("click", () => void store.submitAddDialog());
  dialog.appendChild(button);

  if (store.addDialog.hint) {
    dialog.appendChild(el("p", "hint error", store.addDialog.hint));
  }
  if (store.addDialog.task) {
    dialog.appendChild(renderJobPanel(store.addDialog.task, "install"));
  }
  container.appendChild(dialog);
}

// --- job + results ----------------------------------------------------------

export function renderJobPanel(record: JobRecord, kind = "job"): HTMLElement {
  const panel = el("div", `job-panel job-${record.state}`);
  panel.dataset.jobId = record.id;
  panel.appendChild(el("span", "job-state", `${kind}: ${record.state}`));
  const bar = el("div", "progress");
  const fill = el("div", "progress-fill");
  fill.style.width = `${Math.round(record.progress * 100)}%`;
  bar.appendChild(fill);
  panel.appendChild(bar);
  if (record.error) {
    panel.appendChild(el("p", "error", record.error));
  }
  for (const warning of record.warnings) {
    panel.appendChild(el("p", "warning", warning));
  }
  return panel;
}

export function renderResults(
  container: HTMLElement,
  record: JobRecord,
  api: ApiClient,
): void {
  container.replaceChildren();
  container.appendChild(renderJobPanel(record, "run"));
  if (record.state !== "done") return;

  for (const output of record.outputs) {
    if (output.type === "audio" && output.index !== undefined) {
      container.appendChild(renderTrackResult(record, output.index, api));
    } else if (output.type === "labels") {
      const section = el("div", "labels-result");
      const download = el("a", "download-link", "Download label track");
      download.setAttribute("href", api.labelsUrl(record.id));
      download.setAttribute("download", "labels.txt");
      section.appendChild(download);
      const tableHost = el("div", "label-table-host");
      section.appendChild(tableHost);
      container.appendChild(section);
      void api
        .fetchLabels(record.id)
        .then((text) => renderLabelTable(tableHost, parseLabelText(text)))
        .catch(() => tableHost.appendChild(el("p", "error", "could not load labels")));
    }
  }
}

function renderTrackResult(record: JobRecord, index: number, api: ApiClient): HTMLElement {
  const section = el("div", "track-result");
  section.dataset.trackIndex = String(index);
  const title = el("span", "track-name", `track_${String(index).padStart(2, "0")}.wav`);
  section.appendChild(title);

  const download = el("a", "download-link", "Download");
  download.setAttribute("href", api.outputUrl(record.id, index));
  download.setAttribute("download", `track_${String(index).padStart(2, "0")}.wav`);
  section.appendChild(download);

  const canvas = el("canvas", "waveform-preview") as HTMLCanvasElement;
  canvas.width = 480;
  canvas.height = 64;
  section.appendChild(canvas);
  void api
    .fetchOutput(record.id, index)
    .then((buffer) => {
      const decoded = decodeWav(buffer);
      drawWaveform(canvas, peaks(decoded.samples, canvas.width));
    })
    .catch(() => {
      section.appendChild(el("p", "error", "preview unavailable"));
    });
  return section;
}

export function renderLabelTable(
  host: HTMLElement,
  rows: LabelRow[],
  sortKey: LabelSortKey = "start",
  descending = false,
): void {
  host.replaceChildren();
  const table = el("table", "label-table");
  const head = el("tr");
  for (const key of ["start", "end", "label"] as LabelSortKey[]) {
    const th = el("th", undefined, key + (key === sortKey ? (descending ? " ↓" : " ↑") : ""));
    th.addEventListener("click", () => {
      const flip = key === sortKey ? !descending : false;
      renderLabelTable(host, rows, key, flip);
    });
    head.appendChild(th);
  }
  table.appendChild(head);

  for (const row of sortLabelRows(rows, sortKey, descending)) {
    const tr = el("tr");
    tr.appendChild(el("td", undefined, row.start.toFixed(6)));
    tr.appendChild(el("td", undefined, row.end.toFixed(6)));
    tr.appendChild(el("td", undefined, row.label));
    table.appendChild(tr);
  }
  host.appendChild(table);
}
