// Dataset file schema shared with the training stack: records.jsonl,
// pairs.jsonl and manifest.json. The manifest carries exactly the fields
// the loader knows; ingest-specific metadata goes in separate sidecars.

import { createHash } from 'node:crypto';

export interface DatasetRecord {
  id: string;
  theme_id: number;
  split: string;
  audio: number[][];
  visual: number[][];
  flags?: string[];
}

export interface DatasetPair {
  visual_id: string;
  audio_id: string;
  label: 0 | 1;
  theme_true: number;
}

export interface DatasetManifest {
  num_themes: number;
  visual_dim: number;
  audio_dim: number;
  num_frames: number;
  audio_steps: number;
  negative_mode: string;
  gamma: number;
  seed: number;
  split_counts: { [split: string]: number };
  companion_count: number;
  config_hash: string;
}

export function recordLine(rec: DatasetRecord): string {
  const row: any = {
    id: rec.id,
    theme_id: rec.theme_id,
    split: rec.split,
    audio: rec.audio,
    visual: rec.visual,
  };
  if (rec.flags && rec.flags.length) row.flags = rec.flags;
  return JSON.stringify(row) + '\n';
}

export function pairsJsonl(pairs: DatasetPair[]): string {
  return pairs.map(p => JSON.stringify(p) + '\n').join('');
}

/** one positive per record plus, given two or more, one wrong-audio negative */
export function buildPairs(records: DatasetRecord[]): DatasetPair[] {
  const pairs: DatasetPair[] = [];
  for (let i = 0; i < records.length; i++) {
    const r = records[i];
    pairs.push({ visual_id: r.id, audio_id: r.id, label: 1, theme_true: r.theme_id });
    if (records.length > 1) {
      const other = records[(i + 1) % records.length];
      pairs.push({ visual_id: r.id, audio_id: other.id, label: 0, theme_true: r.theme_id });
    }
  }
  return pairs;
}

export interface ManifestInputs {
  numThemes: number;
  visualDim: number;
  audioDim: number;
  numFrames: number;
  audioSteps: number;
  recordCount: number;
  configHash: string;
}

export function buildManifest(inp: ManifestInputs): DatasetManifest {
  return {
    num_themes: inp.numThemes,
    visual_dim: inp.visualDim,
    audio_dim: inp.audioDim,
    num_frames: inp.numFrames,
    audio_steps: inp.audioSteps,
    negative_mode: 'shuffle',
    gamma: 0.0,
    seed: 0,
    split_counts: { train: inp.recordCount, val: 0, test: 0 },
    companion_count: 0,
    config_hash: inp.configHash,
  };
}

/** sorted keys, 2-space indent, trailing newline, like the training stack writes */
export function manifestJson(manifest: DatasetManifest): string {
  const sortKeys = (value: any): any => {
    if (Array.isArray(value)) return value.map(sortKeys);
    if (value && typeof value === 'object') {
      const out: any = {};
      for (const key of Object.keys(value).sort()) out[key] = sortKeys(value[key]);
      return out;
    }
    return value;
  };
  return JSON.stringify(sortKeys(manifest), null, 2) + '\n';
}

/** contiguous theme ids in sorted label order, for reproducible mappings */
export function themeMapping(labels: string[]): Map<string, number> {
  const unique = Array.from(new Set(labels)).sort();
  return new Map(unique.map((label, i) => [label, i]));
}

export function contentHash(parts: string[]): string {
  const h = createHash('sha1');
  for (const p of parts) h.update(p, 'utf8');
  return h.digest('hex');
}
