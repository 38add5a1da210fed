import type { BoxTuple, DetectionTuple, RecordView } from "./types.js";

/**
 * Wire-format helpers for the challenge CSV files.
 *
 * Numbers are written with JavaScript's default shortest round-trip
 * formatting, which the Python side parses back to the identical double,
 * so results stay numerically identical across the process boundary.
 */

function checkFinite(value: number, context: string): number {
  if (typeof value !== "number" || !Number.isFinite(value)) {
    throw new Error(`${context}: expected a finite number, got ${String(value)}`);
  }
  return value;
}

export function checkBox(box: readonly number[], context: string): BoxTuple {
  if (!Array.isArray(box) || box.length !== 4) {
    throw new Error(`${context}: a box must be [x, y, w, h]`);
  }
  const [x, y, w, h] = box.map((v) => checkFinite(v, context));
  if (w < 0 || h < 0) {
    throw new Error(`${context}: box sides must be non-negative`);
  }
  return [x, y, w, h];
}

export function checkDetection(det: readonly number[], context: string): DetectionTuple {
  if (!Array.isArray(det) || det.length !== 5) {
    throw new Error(`${context}: a detection must be [conf, x, y, w, h]`);
  }
  const [conf, x, y, w, h] = det.map((v) => checkFinite(v, context));
  if (conf < 0 || conf > 1) {
    throw new Error(`${context}: confidence ${conf} outside [0, 1]`);
  }
  if (w < 0 || h < 0) {
    throw new Error(`${context}: box sides must be non-negative`);
  }
  return [conf, x, y, w, h];
}

export function checkRecord(record: RecordView, index: number): RecordView {
  if (!record || typeof record.imageId !== "string" || record.imageId.length === 0) {
    throw new Error(`record ${index}: imageId must be a non-empty string`);
  }
  if (/[",\n\r]/.test(record.imageId)) {
    throw new Error(`record "${record.imageId}": imageId must not contain quotes, commas or newlines`);
  }
  const context = `record "${record.imageId}"`;
  return {
    imageId: record.imageId,
    truth: (record.truth ?? []).map((b) => checkBox(b, context)),
    predictions: (record.predictions ?? []).map((d) => checkDetection(d, context)),
  };
}

export function groundTruthCsv(records: RecordView[]): string {
  const lines = ["patientId,x,y,width,height,Target"];
  for (const record of records) {
    const positive = record.truth.filter(([, , w, h]) => w > 0 && h > 0);
    if (positive.length === 0) {
      lines.push(`${record.imageId},,,,,0`);
    } else {
      for (const [x, y, w, h] of positive) {
        lines.push(`${record.imageId},${x},${y},${w},${h},1`);
      }
    }
  }
  return lines.join("\n") + "\n";
}

export function predictionsCsv(rows: Array<[string, DetectionTuple[]]>): string {
  const lines = ["patientId,PredictionString"];
  for (const [patientId, detections] of rows) {
    const groups = detections.map((d) => d.join(" ")).join(" ");
    lines.push(`${patientId},${groups}`);
  }
  return lines.join("\n") + "\n";
}

export function parsePredictionsCsv(text: string): Map<string, DetectionTuple[]> {
  const lines = text.split(/\r?\n/).filter((line) => line.length > 0);
  if (lines[0] !== "patientId,PredictionString") {
    throw new Error(`unexpected predictions header: ${lines[0]}`);
  }
  const out = new Map<string, DetectionTuple[]>();
  for (const line of lines.slice(1)) {
    const comma = line.indexOf(",");
    if (comma < 0) {
      throw new Error(`malformed predictions row: ${line}`);
    }
    const patientId = line.slice(0, comma);
    const tokens = line
      .slice(comma + 1)
      .split(/\s+/)
      .filter((t) => t.length > 0);
    if (tokens.length % 5 !== 0) {
      throw new Error(`patient ${patientId}: prediction string is not groups of 5 values`);
    }
    const detections: DetectionTuple[] = [];
    for (let i = 0; i < tokens.length; i += 5) {
      const values = tokens.slice(i, i + 5).map((t) => {
        const v = Number(t);
        if (Number.isNaN(v)) {
          throw new Error(`patient ${patientId}: ${t} is not a number`);
        }
        return v;
      });
      detections.push(values as unknown as DetectionTuple);
    }
    const existing = out.get(patientId);
    if (existing) {
      existing.push(...detections);
    } else {
      out.set(patientId, detections);
    }
  }
  return out;
}
