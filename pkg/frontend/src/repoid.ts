/** Client-side repo id validation: "namespace/name", one slash, safe chars. */

const PART = /^[A-Za-z0-9][A-Za-z0-9._-]*$/;

/** Returns an inline error message, or null when the id is well-formed. */
export function repoIdError(text: string): string | null {
  const trimmed = text.trim();
  if (!trimmed) return "enter a repo id like namespace/name";
  const parts = trimmed.split("/");
  if (parts.length !== 2) return "expected namespace/name with exactly one slash";
  const [namespace, name] = parts;
  if (!PART.test(namespace)) return `invalid namespace "${namespace}"`;
  if (!PART.test(name)) return `invalid model name "${name}"`;
  return null;
}

export function normalizeRepoId(text: string): string {
  return text.trim();
}
