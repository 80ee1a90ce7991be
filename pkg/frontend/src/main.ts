/** Application entry: tab shell wiring the store to the renderers. */

import { ApiClient } from "./api.js";
import {
  renderAddDialog,
  renderCuratedList,
  renderInstalledList,
  renderResults,
} from "./render.js";
import { ManagerStore } from "./state.js";

const TABS = ["browse", "run", "results"] as const;
type Tab = (typeof TABS)[number];

export function mountApp(root: HTMLElement, api: ApiClient = new ApiClient()): ManagerStore {
  const store = new ManagerStore(api);
  let activeTab: Tab = "browse";

  root.replaceChildren();
  const nav = document.createElement("nav");
  nav.className = "tabs";
  const sections: Record<Tab, HTMLElement> = {} as Record<Tab, HTMLElement>;
  for (const tab of TABS) {
    const button = document.createElement("button");
    button.textContent = tab;
    button.dataset.tab = tab;
    button.addEventListener("click", () => {
      activeTab = tab;
      update();
    });
    nav.appendChild(button);
    const section = document.createElement("section");
    section.dataset.section = tab;
    sections[tab] = section;
  }
  root.appendChild(nav);
  const errorBar = document.createElement("div");
  errorBar.className = "error-bar";
  root.appendChild(errorBar);
  for (const tab of TABS) root.appendChild(sections[tab]);

  const browse = sections.browse;
  const curatedHost = document.createElement("div");
  const addHost = document.createElement("div");
  const installedHost = document.createElement("div");
  browse.append(curatedHost, addHost, installedHost);

  const run = sections.run;
  const fileInput = document.createElement("input");
  fileInput.type = "file";
  fileInput.accept = ".wav,audio/wav";
  const uploadNote = document.createElement("p");
  uploadNote.className = "upload-note";
  const modelSelect = document.createElement("select");
  modelSelect.className = "model-select";
  const runButton = document.createElement("button");
  runButton.textContent = "Run model";
  run.append(fileInput, uploadNote, modelSelect, runButton);

  fileInput.addEventListener("change", () => {
    const file = fileInput.files?.[0];
    if (file) void store.uploadAudio(file, file.name);
  });
  runButton.addEventListener("click", () => {
    if (modelSelect.value) void store.submitRun(modelSelect.value);
  });

  function update(): void {
    for (const tab of TABS) {
      sections[tab].style.display = tab === activeTab ? "" : "none";
    }
    errorBar.textContent = store.lastError ?? "";

    renderCuratedList(curatedHost, store.curatedRows, (repoId) =>
      void store.installCurated(repoId),
    );
    renderAddDialog(addHost, store);
    renderInstalledList(installedHost, store.installed, (repoId) =>
      void store.api.uninstall(repoId).then(() => store.refreshModels()),
    );

    uploadNote.textContent = store.uploadedSummary
      ? `uploaded: ${store.uploadedSummary}`
      : "upload a WAV file to begin";
    const options = store.runnableModels();
    if (modelSelect.children.length !== options.length) {
      modelSelect.replaceChildren(
        ...options.map((ref) => {
          const option = document.createElement("option");
          option.value = ref;
          option.textContent = ref;
          return option;
        }),
      );
    }

    if (store.runJob) {
      renderResults(sections.results, store.runJob, api);
      if (store.runJob.state === "done" && activeTab === "run") {
        activeTab = "results";
        for (const tab of TABS) {
          sections[tab].style.display = tab === activeTab ? "" : "none";
        }
      }
    }
  }

  store.subscribe(update);
  update();
  void store.refreshModels();
  return store;
}

declare global {
  interface Window {
    wavehostStore?: ManagerStore;
  }
}

if (typeof document !== "undefined" && document.getElementById("app")) {
  window.wavehostStore = mountApp(document.getElementById("app") as HTMLElement);
}
