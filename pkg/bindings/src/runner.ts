import { execFileSync } from "node:child_process";
import { mkdtempSync, rmSync, writeFileSync, readFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

/** Python interpreter that has the pneumobox package installed. */
function pythonExecutable(): string {
  return process.env.PNEUMOBOX_PYTHON ?? "python3";
}

/** Run one pneumobox CLI subcommand and return its stdout. */
export function runCli(args: string[]): string {
  try {
    return execFileSync(pythonExecutable(), ["-m", "pneumobox", ...args], {
      encoding: "utf8",
      maxBuffer: 256 * 1024 * 1024,
    });
  } catch (err) {
    const anyErr = err as { stderr?: string; message: string };
    const detail = anyErr.stderr ? anyErr.stderr.trim() : anyErr.message;
    throw new Error(`pneumobox ${args[0]} failed: ${detail}`);
  }
}

/** Create a scratch directory, hand it to fn, and always clean it up. */
export function withTempDir<T>(fn: (dir: string) => T): T {
  const dir = mkdtempSync(join(tmpdir(), "pneumobox-"));
  try {
    return fn(dir);
  } finally {
    rmSync(dir, { recursive: true, force: true });
  }
}

export function writeText(dir: string, name: string, text: string): string {
  const path = join(dir, name);
  writeFileSync(path, text, "utf8");
  return path;
}

export function readText(path: string): string {
  return readFileSync(path, "utf8");
}
