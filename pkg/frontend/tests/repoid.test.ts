import { describe, expect, it } from "vitest";

import { repoIdError } from "../src/repoid.js";

describe("repoIdError", () => {
  it("accepts the documented example id", () => {
    expect(repoIdError("hugggof/ConvTasNet-Vocals")).toBeNull();
  });

  it("accepts dots, dashes and underscores", () => {
    expect(repoIdError("a.b-c_d/E2.f-g_h")).toBeNull();
  });

  it("trims surrounding whitespace", () => {
    expect(repoIdError("  ns/name  ")).toBeNull();
  });

  it("rejects a missing slash with a helpful hint", () => {
    expect(repoIdError("noslash")).toMatch(/namespace\/name/);
  });

  it("rejects multiple slashes", () => {
    expect(repoIdError("a/b/c")).toMatch(/one slash/);
  });

  it("rejects empty or illegal parts", () => {
    expect(repoIdError("/name")).not.toBeNull();
    expect(repoIdError("ns/")).not.toBeNull();
    expect(repoIdError("ns/bad name")).not.toBeNull();
    expect(repoIdError("-lead/x")).not.toBeNull();
    expect(repoIdError("")).not.toBeNull();
  });
});
