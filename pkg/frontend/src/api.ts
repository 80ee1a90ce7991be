/**
 * Typed client over the manager-service HTTP API.
 *
 * Every request in the UI goes through this module, so the set of endpoints
 * it can possibly touch is exactly the documented surface. Non-2xx bodies
 * are always one ApiError object and surface as ApiRequestError.
 */

export type EffectType = "waveform-to-waveform" | "waveform-to-labels";

export interface ModelMetadata {
  name: string;
  effect_type: EffectType;
  sample_rate: number;
  short_description: string;
  long_description: string;
  domains: string[];
  tags: string[];
  labels?: string[];
  multichannel: boolean;
}

export interface InstalledModel {
  repo_id: string;
  revision: string;
  sha256: string;
  installed_at: string;
  metadata: ModelMetadata;
}

export interface CuratedRow {
  repo_id: string;
  note: string;
  pinned_revision: string | null;
  installed: boolean;
  metadata: ModelMetadata | null;
}

export interface HubCard {
  repo_id: string;
  tags: string[];
  files: string[];
  effect_type: EffectType | null;
  short_description: string | null;
}

export interface JobOutput {
  type: "audio" | "labels" | "installed";
  index?: number;
  url?: string;
  spans?: number;
  repo_id?: string;
  duration_s?: number;
  sample_rate?: number;
}

export type JobState = "queued" | "running" | "done" | "failed";

export interface JobRecord {
  id: string;
  kind: string;
  repo_id: string;
  audio_id: string | null;
  state: JobState;
  progress: number;
  error: string | null;
  warnings: string[];
  outputs: JobOutput[];
}

export interface UploadedAudio {
  audio_id: string;
  duration_s: number;
  channels: number;
  sample_rate: number;
}

export class ApiRequestError extends Error {
  constructor(
    public readonly status: number,
    public readonly code: string,
    message: string,
  ) {
    super(message);
  }
}

async function raiseForStatus(response: Response): Promise<void> {
  if (response.ok) return;
  let code = "http_error";
  let message = `${response.status} ${response.statusText}`;
  try {
    const body = (await response.json()) as { code?: string; message?: string };
    if (body.code) code = body.code;
    if (body.message) message = body.message;
  } catch {
    // non-JSON error body: keep the status line
  }
  throw new ApiRequestError(response.status, code, message);
}

export class ApiClient {
  constructor(private readonly baseUrl: string = "") {}

  private async json<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await fetch(this.baseUrl + path, init);
    await raiseForStatus(response);
    return (await response.json()) as T;
  }

  listModels(): Promise<InstalledModel[]> {
    return this.json("/api/models");
  }

  curated(): Promise<CuratedRow[]> {
    return this.json("/api/models/curated");
  }

  searchHub(type?: "effect" | "analyzer"): Promise<HubCard[]> {
    const query = type ? `?type=${type}` : "";
    return this.json(`/api/hub/search${query}`);
  }

  install(repoId: string, revision?: string): Promise<{ task_id: string; repo_id: string }> {
    return this.json("/api/models/install", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(revision ? { repo_id: repoId, revision } : { repo_id: repoId }),
    });
  }

  async uninstall(repoId: string): Promise<void> {
    const response = await fetch(`${this.baseUrl}/api/models/${repoId}`, { method: "DELETE" });
    await raiseForStatus(response);
  }

  uploadAudio(file: Blob, name = "audio.wav"): Promise<UploadedAudio> {
    const form = new FormData();
    form.append("file", file, name);
    return this.json("/api/audio", { method: "POST", body: form });
  }

  submitJob(repoId: string, audioId: string): Promise<{ job_id: string }> {
    return this.json("/api/jobs", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ repo_id: repoId, audio_id: audioId }),
    });
  }

  jobStatus(jobId: string): Promise<JobRecord> {
    return this.json(`/api/jobs/${jobId}`);
  }

  outputUrl(jobId: string, index: number): string {
    return `${this.baseUrl}/api/jobs/${jobId}/outputs/${index}`;
  }

  labelsUrl(jobId: string): string {
    return `${this.baseUrl}/api/jobs/${jobId}/labels`;
  }

  async fetchOutput(jobId: string, index: number): Promise<ArrayBuffer> {
    const response = await fetch(this.outputUrl(jobId, index));
    await raiseForStatus(response);
    return response.arrayBuffer();
  }

  async fetchLabels(jobId: string): Promise<string> {
    const response = await fetch(this.labelsUrl(jobId));
    await raiseForStatus(response);
    return response.text();
  }
}
