/**
 * Node bindings for the pneumobox detection post-processing toolkit.
 *
 * The heavy lifting stays in the Python package: every call serializes its
 * inputs to the challenge wire formats, drives the pneumobox CLI in a
 * subprocess, and parses the full-precision output back. Numbers cross the
 * boundary via shortest round-trip decimal strings, so results are
 * numerically identical to calling the Python API directly. Calls are
 * synchronous and independent, hence safe to issue from concurrent workers.
 *
 * Requires the pneumobox Python package on PATH (or set PNEUMOBOX_PYTHON
 * to the interpreter that has it installed).
 */

import {
  checkDetection,
  checkRecord,
  groundTruthCsv,
  parsePredictionsCsv,
  predictionsCsv,
} from "./format.js";
import { readText, runCli, withTempDir, writeText } from "./runner.js";
import type {
  BoxTuple,
  Comparator,
  DetectionTuple,
  EmptyImagePolicy,
  RecordView,
  ShrinkMode,
} from "./types.js";

export type {
  BoxTuple,
  Comparator,
  DetectionTuple,
  EmptyImagePolicy,
  RecordView,
  ShrinkMode,
};

const SINGLE_IMAGE_ID = "p0";

/**
 * Mean average precision of per-image predictions against ground truth.
 *
 * Mirrors the Python scorer exactly: per-image AP is averaged over the IoU
 * threshold ladder (default 0.4..0.75 step 0.05) with greedy matching.
 * Throws when no image contributes under the empty-image policy or when a
 * record is malformed (the error names the offending imageId).
 */
export function evaluate(
  records: RecordView[],
  thresholds?: number[],
  comparator?: Comparator,
  emptyPolicy?: EmptyImagePolicy,
): number {
  if (!Array.isArray(records) || records.length === 0) {
    throw new Error("evaluate needs at least one record");
  }
  const checked = records.map((r, i) => checkRecord(r, i));
  const ids = new Set(checked.map((r) => r.imageId));
  if (ids.size !== checked.length) {
    throw new Error("record imageIds must be unique");
  }
  return withTempDir((dir) => {
    const truthPath = writeText(dir, "truth.csv", groundTruthCsv(checked));
    const predPath = writeText(
      dir,
      "pred.csv",
      predictionsCsv(checked.map((r) => [r.imageId, r.predictions])),
    );
    const args = ["evaluate", "--truth", truthPath, "--pred", predPath, "--json"];
    if (thresholds !== undefined) {
      if (thresholds.length === 0) {
        throw new Error("thresholds must be non-empty when given");
      }
      args.push("--thresholds", thresholds.join(","));
    }
    if (comparator !== undefined) {
      args.push("--comparator", comparator);
    }
    if (emptyPolicy !== undefined) {
      args.push("--empty-policy", emptyPolicy);
    }
    const out = JSON.parse(runCli(args)) as { map: number };
    return out.map;
  });
}

/**
 * Greedy non-maximum suppression; returns survivors sorted by descending
 * confidence. Zero-area boxes are dropped, matching the wire contract.
 */
export function nms(detections: DetectionTuple[], iouThreshold: number): DetectionTuple[] {
  const checked = detections.map((d, i) => checkDetection(d, `detection ${i}`));
  if (!Number.isFinite(iouThreshold)) {
    throw new Error("iouThreshold must be a finite number");
  }
  return withTempDir((dir) => {
    const predPath = writeText(
      dir,
      "pred.csv",
      predictionsCsv([[SINGLE_IMAGE_ID, checked]]),
    );
    const outPath = `${dir}/out.csv`;
    runCli([
      "nms",
      "--pred", predPath,
      "--iou-threshold", String(iouThreshold),
      "--precision", "full",
      "-o", outPath,
    ]);
    return parsePredictionsCsv(readText(outPath)).get(SINGLE_IMAGE_ID) ?? [];
  });
}

/**
 * Multi-source fusion: cluster pooled detections, fuse each cluster with the
 * percentile-shrink or fixed-rescale rule, then suppress. Defaults mirror
 * the Python pipeline (clusterIou 0.5, percentile mode, scale 1.6,
 * rescaleFactor 0.875, nmsThreshold 0.5).
 */
export function fuse(
  detsBySource: DetectionTuple[][],
  clusterIou = 0.5,
  mode: ShrinkMode = "percentile",
  scale = 1.6,
  rescaleFactor = 0.875,
  nmsThreshold = 0.5,
): DetectionTuple[] {
  if (!Array.isArray(detsBySource) || detsBySource.length === 0) {
    throw new Error("fuse needs at least one source");
  }
  const checked = detsBySource.map((dets, s) =>
    dets.map((d, i) => checkDetection(d, `source ${s}, detection ${i}`)),
  );
  return withTempDir((dir) => {
    const args = [
      "fuse",
      "--cluster-iou", String(clusterIou),
      "--mode", mode,
      "--scale", String(scale),
      "--rescale-factor", String(rescaleFactor),
      "--nms", String(nmsThreshold),
      "--precision", "full",
    ];
    args.push("--pred");
    checked.forEach((dets, s) => {
      args.push(writeText(dir, `source${s}.csv`, predictionsCsv([[SINGLE_IMAGE_ID, dets]])));
    });
    const outPath = `${dir}/out.csv`;
    args.push("-o", outPath);
    runCli(args);
    return parsePredictionsCsv(readText(outPath)).get(SINGLE_IMAGE_ID) ?? [];
  });
}
