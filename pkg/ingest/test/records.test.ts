import { describe, expect, it } from 'vitest';

import { sampleFrameIndices } from '../src/sample';
import {
  DatasetRecord,
  recordLine,
  buildPairs,
  buildManifest,
  manifestJson,
  themeMapping,
} from '../src/records';

const rec = (id: string, theme: number): DatasetRecord => ({
  id,
  theme_id: theme,
  split: 'train',
  audio: [[0.5]],
  visual: [[0.25]],
});

describe('sampleFrameIndices', () => {
  it('covers a long clip end to end', () => {
    const { indices, repeated } = sampleFrameIndices(12);
    expect(indices).toEqual([0, 2, 3, 5, 6, 8, 9, 11]);
    expect(repeated).toBe(false);
  });

  it('is the identity at exactly eight frames', () => {
    expect(sampleFrameIndices(8).indices).toEqual([0, 1, 2, 3, 4, 5, 6, 7]);
  });

  it('repeats frames for short clips and says so', () => {
    const { indices, repeated } = sampleFrameIndices(3);
    expect(indices).toEqual([0, 0, 1, 1, 1, 1, 2, 2]);
    expect(repeated).toBe(true);
    expect(sampleFrameIndices(1).indices).toEqual([0, 0, 0, 0, 0, 0, 0, 0]);
  });
});

describe('buildPairs', () => {
  it('emits one positive and one wrong-audio negative per record', () => {
    const pairs = buildPairs([rec('a', 0), rec('b', 1)]);
    expect(pairs).toEqual([
      { visual_id: 'a', audio_id: 'a', label: 1, theme_true: 0 },
      { visual_id: 'a', audio_id: 'b', label: 0, theme_true: 0 },
      { visual_id: 'b', audio_id: 'b', label: 1, theme_true: 1 },
      { visual_id: 'b', audio_id: 'a', label: 0, theme_true: 1 },
    ]);
  });

  it('cannot build a negative from a single record', () => {
    expect(buildPairs([rec('only', 0)])).toEqual([
      { visual_id: 'only', audio_id: 'only', label: 1, theme_true: 0 },
    ]);
  });
});

describe('manifest', () => {
  it('carries exactly the fields the loader accepts', () => {
    const manifest = buildManifest({
      numThemes: 2,
      visualDim: 64,
      audioDim: 32,
      numFrames: 8,
      audioSteps: 24,
      recordCount: 2,
      configHash: 'abc',
    });
    const parsed = JSON.parse(manifestJson(manifest));
    expect(Object.keys(parsed).sort()).toEqual([
      'audio_dim',
      'audio_steps',
      'companion_count',
      'config_hash',
      'gamma',
      'negative_mode',
      'num_frames',
      'num_themes',
      'seed',
      'split_counts',
      'visual_dim',
    ]);
    expect(parsed.split_counts).toEqual({ train: 2, val: 0, test: 0 });
    expect(manifestJson(manifest).endsWith('\n')).toBe(true);
  });
});

describe('record serialization', () => {
  it('omits empty flags and keeps them when set', () => {
    const plain = JSON.parse(recordLine(rec('a', 0)));
    expect('flags' in plain).toBe(false);
    const flagged = { ...rec('b', 1), flags: ['frames-repeated'] };
    expect(JSON.parse(recordLine(flagged)).flags).toEqual(['frames-repeated']);
  });
});

describe('themeMapping', () => {
  it('assigns contiguous ids in sorted label order', () => {
    const mapping = themeMapping(['travel', 'retail', 'travel', 'retail']);
    expect(Array.from(mapping.entries())).toEqual([
      ['retail', 0],
      ['travel', 1],
    ]);
  });
});
