/**
 * Mocked manager-service for contract tests.
 *
 * Implements only the documented endpoints; any other path or method makes
 * the test fail loudly, which is exactly the UI contract under test.
 */

import { CuratedRow, InstalledModel, JobRecord } from "../src/api.js";

export interface Call {
  method: string;
  path: string;
  body?: unknown;
}

const json = (body: unknown, status = 200) =>
  new Response(JSON.stringify(body), {
    status,
    headers: { "Content-Type": "application/json" },
  });

export class MockService {
  calls: Call[] = [];
  curatedRows: CuratedRow[] = [];
  installed: InstalledModel[] = [];
  /** job id -> queue of status snapshots; the last one repeats */
  jobSequences = new Map<string, JobRecord[]>();
  installTasks = new Map<string, string>(); // repo_id -> task_id
  trackBytes = new Map<string, ArrayBuffer>(); // "jobId/index" -> WAV bytes
  labelText = new Map<string, string>(); // jobId -> label text

  fetch = async (input: RequestInfo | URL, init?: RequestInit): Promise<Response> => {
    const url = typeof input === "string" ? input : input instanceof URL ? input.href : input.url;
    const path = url.replace(/^https?:\/\/[^/]+/, "");
    const method = (init?.method ?? "GET").toUpperCase();
    let body: unknown;
    if (typeof init?.body === "string") body = JSON.parse(init.body);
    this.calls.push({ method, path, body });

    if (method === "GET" && path === "/api/models") return json(this.installed);
    if (method === "GET" && path === "/api/models/curated") return json(this.curatedRows);
    if (method === "GET" && path.startsWith("/api/hub/search")) return json([]);

    if (method === "POST" && path === "/api/models/install") {
      const repoId = (body as { repo_id: string }).repo_id;
      const taskId = this.installTasks.get(repoId);
      if (!taskId) return json({ code: "repo_not_found", message: `unknown ${repoId}` }, 404);
      return json({ task_id: taskId, repo_id: repoId }, 202);
    }
    if (method === "DELETE" && /^\/api\/models\/[^/]+\/[^/]+$/.test(path)) {
      return new Response(null, { status: 204 });
    }

    if (method === "POST" && path === "/api/audio") {
      return json({ audio_id: "audio-1", duration_s: 1.0, channels: 1, sample_rate: 16000 });
    }
    if (method === "POST" && path === "/api/jobs") {
      return json({ job_id: "job-1" }, 202);
    }

    let match = path.match(/^\/api\/jobs\/([^/]+)$/);
    if (method === "GET" && match) {
      const sequence = this.jobSequences.get(match[1]);
      if (!sequence || sequence.length === 0) {
        return json({ code: "job_not_found", message: `no such job: ${match[1]}` }, 404);
      }
      const record = sequence.length > 1 ? sequence.shift()! : sequence[0];
      return json(record);
    }

    match = path.match(/^\/api\/jobs\/([^/]+)\/outputs\/(\d+)$/);
    if (method === "GET" && match) {
      const bytes = this.trackBytes.get(`${match[1]}/${match[2]}`);
      if (!bytes) return json({ code: "output_not_found", message: "no such output" }, 404);
      return new Response(bytes, { status: 200, headers: { "Content-Type": "audio/wav" } });
    }

    match = path.match(/^\/api\/jobs\/([^/]+)\/labels$/);
    if (method === "GET" && match) {
      const text = this.labelText.get(match[1]);
      if (text === undefined) return json({ code: "no_labels", message: "no labels" }, 404);
      return new Response(text, { status: 200, headers: { "Content-Type": "text/plain" } });
    }

    throw new Error(`undocumented endpoint used by the UI: ${method} ${path}`);
  };
}

export function jobRecord(partial: Partial<JobRecord> & { id: string }): JobRecord {
  return {
    kind: "run",
    repo_id: "builtin/band_split",
    audio_id: "audio-1",
    state: "queued",
    progress: 0,
    error: null,
    warnings: [],
    outputs: [],
    ...partial,
  };
}

export function installedModel(repoId: string, effectType = "waveform-to-waveform"): InstalledModel {
  return {
    repo_id: repoId,
    revision: "main",
    sha256: "0".repeat(64),
    installed_at: "2026-08-09T00:00:00+00:00",
    metadata: {
      name: repoId.split("/")[1],
      effect_type: effectType as InstalledModel["metadata"]["effect_type"],
      sample_rate: 16000,
      short_description: "test model",
      long_description: "",
      domains: ["other"],
      tags: [],
      multichannel: false,
    },
  };
}

export function curatedRow(repoId: string, installed: boolean): CuratedRow {
  return {
    repo_id: repoId,
    note: `note for ${repoId}`,
    pinned_revision: null,
    installed,
    metadata: installed ? installedModel(repoId).metadata : null,
  };
}

/** Tiny mono float32 WAV, enough for the preview decoder. */
export function makeWavBytes(samples: number[], sampleRate = 16000): ArrayBuffer {
  const dataSize = samples.length * 4;
  const buffer = new ArrayBuffer(44 + dataSize);
  const view = new DataView(buffer);
  const ascii = (offset: number, text: string) => {
    for (let i = 0; i < text.length; i++) view.setUint8(offset + i, text.charCodeAt(i));
  };
  ascii(0, "RIFF");
  view.setUint32(4, 36 + dataSize, true);
  ascii(8, "WAVE");
  ascii(12, "fmt ");
  view.setUint32(16, 16, true);
  view.setUint16(20, 3, true); // IEEE float
  view.setUint16(22, 1, true);
  view.setUint32(24, sampleRate, true);
  view.setUint32(28, sampleRate * 4, true);
  view.setUint16(32, 4, true);
  view.setUint16(34, 32, true);
  ascii(36, "data");
  view.setUint32(40, dataSize, true);
  samples.forEach((value, i) => view.setFloat32(44 + i * 4, value, true));
  return buffer;
}
