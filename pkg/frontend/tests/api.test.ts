import { afterEach, describe, expect, it, vi } from "vitest";

import { ApiClient, ApiRequestError } from "../src/api.js";
import { MockService, installedModel, jobRecord } from "./mock_service.js";

function client(): { api: ApiClient; mock: MockService } {
  const mock = new MockService();
  vi.stubGlobal("fetch", mock.fetch);
  return { api: new ApiClient(), mock };
}

afterEach(() => {
  vi.unstubAllGlobals();
});

describe("ApiClient", () => {
  it("lists installed models from the documented endpoint", async () => {
    const { api, mock } = client();
    mock.installed = [installedModel("acme/gain")];
    const models = await api.listModels();
    expect(models[0].repo_id).toBe("acme/gain");
    expect(mock.calls).toEqual([{ method: "GET", path: "/api/models", body: undefined }]);
  });

  it("posts installs with the repo id body", async () => {
    const { api, mock } = client();
    mock.installTasks.set("acme/gain", "task-9");
    const result = await api.install("acme/gain");
    expect(result.task_id).toBe("task-9");
    expect(mock.calls[0]).toMatchObject({
      method: "POST",
      path: "/api/models/install",
      body: { repo_id: "acme/gain" },
    });
  });

  it("surfaces ApiError bodies as typed errors", async () => {
    const { api } = client();
    await expect(api.install("ghost/repo")).rejects.toMatchObject({
      status: 404,
      code: "repo_not_found",
    });
    await expect(api.jobStatus("missing")).rejects.toBeInstanceOf(ApiRequestError);
  });

  it("submits jobs and polls status", async () => {
    const { api, mock } = client();
    mock.jobSequences.set("job-1", [jobRecord({ id: "job-1", state: "done", progress: 1 })]);
    const { job_id } = await api.submitJob("builtin/band_split", "audio-1");
    const record = await api.jobStatus(job_id);
    expect(record.state).toBe("done");
    expect(mock.calls.map((c) => c.path)).toEqual(["/api/jobs", "/api/jobs/job-1"]);
  });

  it("uploads audio as multipart form data", async () => {
    const { api, mock } = client();
    const uploaded = await api.uploadAudio(new Blob([new Uint8Array(8)]), "in.wav");
    expect(uploaded.audio_id).toBe("audio-1");
    expect(mock.calls[0].path).toBe("/api/audio");
  });

  it("builds output and label urls under the job resource", () => {
    const api = new ApiClient();
    expect(api.outputUrl("j1", 0)).toBe("/api/jobs/j1/outputs/0");
    expect(api.labelsUrl("j1")).toBe("/api/jobs/j1/labels");
  });

  it("deletes models by namespace and name", async () => {
    const { api, mock } = client();
    await api.uninstall("acme/gain");
    expect(mock.calls[0]).toMatchObject({ method: "DELETE", path: "/api/models/acme/gain" });
  });
});
