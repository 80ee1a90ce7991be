/**
 * View-model store and job polling.
 *
 * UI state is a pure projection of manager-service responses: the store
 * fetches, caches the latest snapshot, and notifies subscribers. Polling is
 * capped at one status request per second per job and stops on terminal
 * states.
 */

import { ApiClient, ApiRequestError, CuratedRow, InstalledModel, JobRecord } from "./api.js";
import { normalizeRepoId, repoIdError } from "./repoid.js";

export const POLL_INTERVAL_MS = 1000;

export const BUILTIN_MODELS = [
  "builtin/passthrough",
  "builtin/gain_half",
  "builtin/band_split",
  "builtin/energy_labeler",
];

export type Listener = () => void;

export interface AddDialogState {
  value: string;
  hint: string | null;
  taskId: string | null;
  task: JobRecord | null;
}

export class JobPoller {
  private timer: ReturnType<typeof setInterval> | null = null;
  private inFlight = false;

  constructor(
    private readonly api: ApiClient,
    private readonly jobId: string,
    private readonly onUpdate: (record: JobRecord) => void,
    private readonly onError: (error: Error) => void = () => {},
    private readonly intervalMs: number = POLL_INTERVAL_MS,
  ) {}

  start(): void {
    if (this.timer !== null) return;
    this.timer = setInterval(() => void this.tick(), this.intervalMs);
    void this.tick(); // immediate first status, then 1/s
  }

  stop(): void {
    if (this.timer !== null) {
      clearInterval(this.timer);
      this.timer = null;
    }
  }

  get running(): boolean {
    return this.timer !== null;
  }

  private async tick(): Promise<void> {
    if (this.inFlight) return; // never stack requests
    this.inFlight = true;
    try {
      const record = await this.api.jobStatus(this.jobId);
      this.onUpdate(record);
      if (record.state === "done" || record.state === "failed") {
        this.stop();
      }
    } catch (error) {
      this.stop();
      this.onError(error as Error);
    } finally {
      this.inFlight = false;
    }
  }
}

export class ManagerStore {
  installed: InstalledModel[] = [];
  curatedRows: CuratedRow[] = [];
  addDialog: AddDialogState = { value: "", hint: null, taskId: null, task: null };
  runJob: JobRecord | null = null;
  uploadedAudioId: string | null = null;
  uploadedSummary: string | null = null;
  lastError: string | null = null;

  private listeners: Listener[] = [];
  private pollers: Map<string, JobPoller> = new Map();

  constructor(
    readonly api: ApiClient,
    private readonly pollIntervalMs: number = POLL_INTERVAL_MS,
  ) {}

  subscribe(listener: Listener): () => void {
    this.listeners.push(listener);
    return () => {
      this.listeners = this.listeners.filter((l) => l !== listener);
    };
  }

  private notify(): void {
    for (const listener of this.listeners) listener();
  }

  private fail(error: unknown): void {
    this.lastError =
      error instanceof ApiRequestError ? `${error.code}: ${error.message}` : String(error);
    this.notify();
  }

  async refreshModels(): Promise<void> {
    try {
      const [installed, curatedRows] = await Promise.all([
        this.api.listModels(),
        this.api.curated(),
      ]);
      this.installed = installed;
      this.curatedRows = curatedRows;
      this.lastError = null;
    } catch (error) {
      this.fail(error);
      return;
    }
    this.notify();
  }

  /** Selectable model refs for the run view: installed repos plus builtins. */
  runnableModels(): string[] {
    return [...this.installed.map((m) => m.repo_id), ...BUILTIN_MODELS];
  }

  setAddDialogValue(value: string): void {
    this.addDialog.value = value;
    this.addDialog.hint = value.trim() ? repoIdError(value) : null;
    this.notify();
  }

  /** Add-from-ID flow: validate locally, then install and track the task. */
  async submitAddDialog(): Promise<void> {
    const error = repoIdError(this.addDialog.value);
    if (error !== null) {
      this.addDialog.hint = error;
      this.notify();
      return; // invalid ids never reach the network
    }
    const repoId = normalizeRepoId(this.addDialog.value);
    try {
      const { task_id } = await this.api.install(repoId);
      this.addDialog.taskId = task_id;
      this.addDialog.hint = null;
      this.notify();
      this.trackJob(task_id, (record) => {
        this.addDialog.task = record;
        if (record.state === "done") void this.refreshModels();
        this.notify();
      });
    } catch (error) {
      this.fail(error);
    }
  }

  async installCurated(repoId: string): Promise<void> {
    try {
      const { task_id } = await this.api.install(repoId);
      this.trackJob(task_id, (record) => {
        if (record.state === "done") void this.refreshModels();
      });
    } catch (error) {
      this.fail(error);
    }
  }

  async uploadAudio(file: Blob, name: string): Promise<void> {
    try {
      const uploaded = await this.api.uploadAudio(file, name);
      this.uploadedAudioId = uploaded.audio_id;
      this.uploadedSummary =
        `${uploaded.duration_s.toFixed(2)} s, ${uploaded.channels} ch, ` +
        `${uploaded.sample_rate} Hz`;
      this.lastError = null;
    } catch (error) {
      this.fail(error);
      return;
    }
    this.notify();
  }

  async submitRun(repoId: string): Promise<void> {
    if (!this.uploadedAudioId) {
      this.lastError = "upload a WAV file first";
      this.notify();
      return;
    }
    try {
      const { job_id } = await this.api.submitJob(repoId, this.uploadedAudioId);
      this.trackJob(job_id, (record) => {
        this.runJob = record;
        this.notify();
      });
    } catch (error) {
      this.fail(error);
    }
  }

  trackJob(jobId: string, onUpdate: (record: JobRecord) => void): JobPoller {
    this.stopTracking(jobId);
    const poller = new JobPoller(
      this.api,
      jobId,
      onUpdate,
      (error) => this.fail(error),
      this.pollIntervalMs,
    );
    this.pollers.set(jobId, poller);
    poller.start();
    return poller;
  }

  stopTracking(jobId: string): void {
    this.pollers.get(jobId)?.stop();
    this.pollers.delete(jobId);
  }

  dispose(): void {
    for (const poller of this.pollers.values()) poller.stop();
    this.pollers.clear();
  }
}
