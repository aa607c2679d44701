// Minimal RIFF AVI reader for uncompressed desk-scale clips: 24-bit BGR
// DIB video ('00db'/'00dc' with biCompression=0) and 16-bit PCM audio.
// Anything else is reported as undecodable so the caller can skip it.

export interface VideoInfo {
  width: number;
  height: number;
  bitCount: number;
  compression: number;
}

export interface AudioInfo {
  formatTag: number;
  channels: number;
  sampleRate: number;
  bitsPerSample: number;
}

export interface AviClip {
  video: VideoInfo;
  audio: AudioInfo;
  /** raw bottom-up DIB payloads, one per frame, in stream order */
  frames: Buffer[];
  /** mono PCM in [-1, 1) */
  samples: Float64Array;
}

function fourcc(buf: Buffer, pos: number): string {
  return buf.toString('latin1', pos, pos + 4);
}

export function parseAvi(buf: Buffer): AviClip {
  if (buf.length < 12 || fourcc(buf, 0) !== 'RIFF' || fourcc(buf, 8) !== 'AVI ') {
    throw new Error('not a RIFF AVI file');
  }

  let video: VideoInfo | undefined;
  let audio: AudioInfo | undefined;
  let streamTypes: string[] = [];
  let frames: Buffer[] = [];
  let audioChunks: Buffer[] = [];

  const walk = (pos: number, end: number) => {
    while (pos + 8 <= end) {
      const id = fourcc(buf, pos);
      const size = buf.readUInt32LE(pos + 4);
      const body = pos + 8;
      if (body + size > buf.length) throw new Error('truncated AVI chunk');
      if (id === 'LIST') {
        walk(body + 4, body + size);
      } else if (id === 'strh') {
        streamTypes.push(fourcc(buf, body));
      } else if (id === 'strf') {
        const kind = streamTypes[streamTypes.length - 1];
        if (kind === 'vids' && !video) {
          video = {
            width: buf.readInt32LE(body + 4),
            height: buf.readInt32LE(body + 8),
            bitCount: buf.readUInt16LE(body + 14),
            compression: buf.readUInt32LE(body + 16),
          };
        } else if (kind === 'auds' && !audio) {
          audio = {
            formatTag: buf.readUInt16LE(body),
            channels: buf.readUInt16LE(body + 2),
            sampleRate: buf.readUInt32LE(body + 4),
            bitsPerSample: buf.readUInt16LE(body + 14),
          };
        }
      } else if (id === '00db' || id === '00dc') {
        frames.push(buf.subarray(body, body + size));
      } else if (id === '01wb') {
        audioChunks.push(buf.subarray(body, body + size));
      }
      pos = body + size + (size % 2); // chunks are word aligned
    }
  };
  walk(12, buf.length);

  if (!video) throw new Error('no video stream');
  if (!audio) throw new Error('no audio stream');
  if (video.compression !== 0) {
    throw new Error(`unsupported video compression 0x${video.compression.toString(16)}`);
  }
  if (video.bitCount !== 24) {
    throw new Error(`unsupported bit depth ${video.bitCount}`);
  }
  if (audio.formatTag !== 1 || audio.bitsPerSample !== 16) {
    throw new Error('unsupported audio format, expected 16-bit PCM');
  }
  if (frames.length === 0) throw new Error('no frames');
  if (audioChunks.length === 0) throw new Error('no audio data');

  return { video, audio, frames, samples: mixToMono(audioChunks, audio.channels) };
}

function mixToMono(chunks: Buffer[], channels: number): Float64Array {
  let total = 0;
  for (const c of chunks) total += Math.floor(c.length / 2);
  const perFrame = channels;
  const out = new Float64Array(Math.floor(total / perFrame));
  let k = 0;
  let acc = 0;
  let inFrame = 0;
  for (const c of chunks) {
    const n = Math.floor(c.length / 2);
    for (let i = 0; i < n; i++) {
      acc += c.readInt16LE(i * 2) / 32768;
      if (++inFrame === perFrame) {
        out[k++] = acc / perFrame;
        acc = 0;
        inFrame = 0;
      }
    }
  }
  return out;
}

/** top-down luma plane in [0, 1] from a bottom-up 24-bit BGR DIB payload */
export function frameLuma(dib: Buffer, width: number, height: number): Float64Array {
  const stride = Math.ceil((width * 3) / 4) * 4;
  if (dib.length < stride * height) throw new Error('short frame payload');
  const out = new Float64Array(width * height);
  for (let y = 0; y < height; y++) {
    const row = (height - 1 - y) * stride;
    for (let x = 0; x < width; x++) {
      const b = dib[row + x * 3];
      const g = dib[row + x * 3 + 1];
      const r = dib[row + x * 3 + 2];
      out[y * width + x] = (0.299 * r + 0.587 * g + 0.114 * b) / 255;
    }
  }
  return out;
}
