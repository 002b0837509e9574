/** Minimal binary PGM (P5, maxval 255) reader for segment thumbnails. */

declare const Buffer: { from(s: string, enc: string): ArrayLike<number> };

export interface PgmImage {
  width: number;
  height: number;
  pixels: Uint8Array;
}

export function base64ToBytes(b64: string): Uint8Array {
  if (typeof atob === "function") {
    const bin = atob(b64);
    const out = new Uint8Array(bin.length);
    for (let i = 0; i < bin.length; i++) out[i] = bin.charCodeAt(i);
    return out;
  }
  // Node (tests)
  return new Uint8Array(Buffer.from(b64, "base64"));
}

export function decodePgm(data: Uint8Array): PgmImage {
  // Header: "P5" <ws> width <ws> height <ws> maxval <single ws> pixels
  let pos = 0;
  const isSpace = (b: number) => b === 0x20 || b === 0x09 || b === 0x0a || b === 0x0d;
  const token = (): string => {
    while (pos < data.length && isSpace(data[pos])) pos++;
    if (data[pos] === 0x23) {
      // comment runs to end of line
      while (pos < data.length && data[pos] !== 0x0a) pos++;
      return token();
    }
    const start = pos;
    while (pos < data.length && !isSpace(data[pos])) pos++;
    return String.fromCharCode(...data.subarray(start, pos));
  };
  if (token() !== "P5") throw new Error("not a binary PGM");
  const width = Number(token());
  const height = Number(token());
  const maxval = Number(token());
  if (!Number.isInteger(width) || !Number.isInteger(height) || width < 1 || height < 1) {
    throw new Error("bad PGM dimensions");
  }
  if (maxval !== 255) throw new Error(`unsupported maxval ${maxval}`);
  pos += 1; // single whitespace after maxval
  const pixels = data.subarray(pos, pos + width * height);
  if (pixels.length !== width * height) throw new Error("truncated PGM payload");
  return { width, height, pixels };
}

export function drawPgmToCanvas(image: PgmImage, canvas: HTMLCanvasElement): void {
  canvas.width = image.width;
  canvas.height = image.height;
  const ctx = canvas.getContext("2d");
  if (!ctx) return;
  const rgba = ctx.createImageData(image.width, image.height);
  for (let i = 0; i < image.pixels.length; i++) {
    const v = image.pixels[i];
    rgba.data[4 * i] = v;
    rgba.data[4 * i + 1] = v;
    rgba.data[4 * i + 2] = v;
    rgba.data[4 * i + 3] = 255;
  }
  ctx.putImageData(rgba, 0, 0);
}
