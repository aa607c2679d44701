// Uniform temporal frame sampling. Timestamps are a pure function of the
// frame count, so the same clip always yields the same frames.

export const FRAMES_PER_CLIP = 8;

export interface FrameSample {
  indices: number[];
  /** true when the clip had fewer distinct frames than requested */
  repeated: boolean;
}

export function sampleFrameIndices(frameCount: number, count = FRAMES_PER_CLIP): FrameSample {
  if (frameCount < 1) throw new Error('clip has no frames');
  const indices: number[] = [];
  for (let k = 0; k < count; k++) {
    indices.push(frameCount === 1 ? 0 : Math.round((k * (frameCount - 1)) / (count - 1)));
  }
  return { indices, repeated: frameCount < count };
}
