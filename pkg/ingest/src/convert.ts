// Conversion pipeline: caller-supplied CSV of (path, theme[, id]) rows in,
// training-ready dataset directory out. Files convert in parallel, each
// record lands in a temp file, and the final records.jsonl is concatenated
// in input order so output never depends on completion order.

import { promises as fs } from 'node:fs';
import * as path from 'node:path';
import { createHash } from 'node:crypto';

import { parseAvi, frameLuma } from './avi';
import {
  visualEmbedding,
  audioEmbedding,
  VISUAL_DIM,
  AUDIO_STEPS,
  AUDIO_BANDS,
  VISUAL_EXTRACTOR,
  AUDIO_EXTRACTOR,
} from './features';
import { sampleFrameIndices, FRAMES_PER_CLIP } from './sample';
import {
  DatasetRecord,
  recordLine,
  buildPairs,
  pairsJsonl,
  buildManifest,
  manifestJson,
  themeMapping,
  contentHash,
} from './records';

export interface MediaItem {
  path: string;
  theme: string;
  id: string;
}

export function parseItemsCsv(text: string, baseDir: string): MediaItem[] {
  const lines = text.split(/\r?\n/).filter(l => l.trim().length > 0);
  if (lines.length === 0) throw new Error('empty items csv');
  const header = lines[0].split(',').map(s => s.trim());
  const pathCol = header.indexOf('path');
  const themeCol = header.indexOf('theme');
  const idCol = header.indexOf('id');
  if (pathCol < 0 || themeCol < 0) {
    throw new Error('items csv needs a header with path and theme columns');
  }
  const items: MediaItem[] = [];
  for (const line of lines.slice(1)) {
    const cells = line.split(',').map(s => s.trim());
    const file = cells[pathCol];
    const theme = cells[themeCol];
    if (!file || !theme) throw new Error(`bad csv row: ${line}`);
    const id = idCol >= 0 && cells[idCol] ? cells[idCol] : path.basename(file, path.extname(file));
    items.push({ path: path.resolve(baseDir, file), theme, id });
  }
  if (items.length === 0) throw new Error('no items in csv');
  const seen = new Set<string>();
  for (const it of items) {
    if (seen.has(it.id)) throw new Error(`duplicate item id ${it.id}`);
    seen.add(it.id);
  }
  return items;
}

interface Converted {
  record: DatasetRecord;
  frameCount: number;
  sampleCount: number;
  fileSha1: string;
}

async function convertItem(item: MediaItem, themeId: number): Promise<Converted> {
  const raw = await fs.readFile(item.path);
  const clip = parseAvi(raw);
  const { indices, repeated } = sampleFrameIndices(clip.frames.length);
  const visual = indices.map(i =>
    visualEmbedding(
      frameLuma(clip.frames[i], clip.video.width, clip.video.height),
      clip.video.width,
      clip.video.height,
    ),
  );
  const record: DatasetRecord = {
    id: item.id,
    theme_id: themeId,
    split: 'train',
    audio: audioEmbedding(clip.samples),
    visual,
  };
  if (repeated) record.flags = ['frames-repeated'];
  return {
    record,
    frameCount: clip.frames.length,
    sampleCount: clip.samples.length,
    fileSha1: createHash('sha1').update(raw).digest('hex'),
  };
}

export type ProgressLog = (event: { event: string; [key: string]: unknown }) => void;

export interface IngestResult {
  converted: number;
  skipped: number;
}

export async function runIngest(
  csvPath: string,
  outDir: string,
  log: ProgressLog = () => {},
): Promise<IngestResult> {
  const csvText = await fs.readFile(csvPath, 'utf8');
  const items = parseItemsCsv(csvText, path.dirname(path.resolve(csvPath)));
  // the mapping covers every label in the csv, so a skipped file never
  // renumbers the themes of the ones that converted
  const themes = themeMapping(items.map(it => it.theme));
  await fs.mkdir(outDir, { recursive: true });

  const tmpPath = (i: number) => path.join(outDir, `.rec-${i}.tmp`);
  const results = await Promise.all(
    items.map(async (item, i) => {
      try {
        const conv = await convertItem(item, themes.get(item.theme)!);
        await fs.writeFile(tmpPath(i), recordLine(conv.record));
        log({
          event: 'converted',
          id: item.id,
          frames: conv.frameCount,
          samples: conv.sampleCount,
          repeated: Boolean(conv.record.flags),
        });
        return conv;
      } catch (err) {
        log({ event: 'skipped', path: item.path, reason: (err as Error).message });
        return null;
      }
    }),
  );

  let recordsJsonl = '';
  const converted: Converted[] = [];
  for (let i = 0; i < results.length; i++) {
    const conv = results[i];
    if (!conv) continue;
    recordsJsonl += await fs.readFile(tmpPath(i), 'utf8');
    await fs.unlink(tmpPath(i));
    converted.push(conv);
  }
  if (converted.length === 0) throw new Error('no items could be converted');

  const records = converted.map(c => c.record);
  const manifest = buildManifest({
    numThemes: themes.size,
    visualDim: VISUAL_DIM,
    audioDim: AUDIO_BANDS,
    numFrames: FRAMES_PER_CLIP,
    audioSteps: AUDIO_STEPS,
    recordCount: records.length,
    configHash: contentHash([
      VISUAL_EXTRACTOR,
      AUDIO_EXTRACTOR,
      ...converted.map(c => `${c.record.id}:${c.record.theme_id}:${c.fileSha1}`),
    ]),
  });

  const extraction = {
    visual_extractor: VISUAL_EXTRACTOR,
    audio_extractor: AUDIO_EXTRACTOR,
    tapped_layer: 'pooled-top',
    sources: Object.fromEntries(
      converted.map(c => [
        c.record.id,
        { frames: c.frameCount, samples: c.sampleCount, sha1: c.fileSha1 },
      ]),
    ),
  };

  await fs.writeFile(path.join(outDir, 'records.jsonl'), recordsJsonl);
  await fs.writeFile(path.join(outDir, 'pairs.jsonl'), pairsJsonl(buildPairs(records)));
  await fs.writeFile(path.join(outDir, 'manifest.json'), manifestJson(manifest));
  await fs.writeFile(
    path.join(outDir, 'themes.json'),
    JSON.stringify(Object.fromEntries(themes), null, 2) + '\n',
  );
  await fs.writeFile(path.join(outDir, 'extraction.json'), JSON.stringify(extraction, null, 2) + '\n');

  return { converted: converted.length, skipped: items.length - converted.length };
}
