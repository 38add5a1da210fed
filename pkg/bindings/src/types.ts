/** Axis-aligned box in pixel coordinates: [x, y, w, h], top-left anchored. */
export type BoxTuple = [number, number, number, number];

/** One prediction: [confidence, x, y, w, h] with confidence in [0, 1]. */
export type DetectionTuple = [number, number, number, number, number];

/** Plain-data mirror of one image's ground truth and predictions. */
export interface RecordView {
  imageId: string;
  truth: BoxTuple[];
  predictions: DetectionTuple[];
}

export type Comparator = "gt" | "ge";
export type EmptyImagePolicy = "exclude" | "count-as-one";
export type ShrinkMode = "percentile" | "rescale";
