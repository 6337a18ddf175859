// Minimal grayscale PNG codec.
//
// Canvas toBlob() only produces RGBA PNGs, but region masks must be
// single-channel (0 = keep, 255 = edit). This encoder emits 8-bit
// grayscale PNGs using stored (uncompressed) deflate blocks, which every
// standard decoder accepts; the decoder here only understands that same
// stored-block layout and exists for tests and round-trip checks.

const SIGNATURE = [0x89, 0x50, 0x4e, 0x47, 0x0d, 0x0a, 0x1a, 0x0a];

const CRC_TABLE = new Uint32Array(256);
for (let n = 0; n < 256; n++) {
  let c = n;
  for (let k = 0; k < 8; k++) {
    c = c & 1 ? 0xedb88320 ^ (c >>> 1) : c >>> 1;
  }
  CRC_TABLE[n] = c >>> 0;
}

export function crc32(bytes: Uint8Array): number {
  let crc = 0xffffffff;
  for (let i = 0; i < bytes.length; i++) {
    crc = CRC_TABLE[(crc ^ bytes[i]) & 0xff] ^ (crc >>> 8);
  }
  return (crc ^ 0xffffffff) >>> 0;
}

export function adler32(bytes: Uint8Array): number {
  let a = 1;
  let b = 0;
  for (let i = 0; i < bytes.length; i++) {
    a = (a + bytes[i]) % 65521;
    b = (b + a) % 65521;
  }
  return ((b << 16) | a) >>> 0;
}

function u32be(value: number): number[] {
  return [(value >>> 24) & 0xff, (value >>> 16) & 0xff, (value >>> 8) & 0xff, value & 0xff];
}

function chunk(type: string, data: Uint8Array): Uint8Array {
  const typeBytes = new TextEncoder().encode(type);
  const body = new Uint8Array(typeBytes.length + data.length);
  body.set(typeBytes, 0);
  body.set(data, typeBytes.length);
  const out = new Uint8Array(4 + body.length + 4);
  out.set(u32be(data.length), 0);
  out.set(body, 4);
  out.set(u32be(crc32(body)), 4 + body.length);
  return out;
}

function zlibStored(raw: Uint8Array): Uint8Array {
  const blocks: number[] = [0x78, 0x01]; // zlib header, no compression preset
  let offset = 0;
  do {
    const len = Math.min(65535, raw.length - offset);
    const final = offset + len >= raw.length ? 1 : 0;
    blocks.push(final, len & 0xff, (len >>> 8) & 0xff, ~len & 0xff, (~len >>> 8) & 0xff);
    for (let i = 0; i < len; i++) blocks.push(raw[offset + i]);
    offset += len;
  } while (offset < raw.length);
  const adler = adler32(raw);
  blocks.push(...u32be(adler));
  return new Uint8Array(blocks);
}

/** Encode an 8-bit grayscale raster (row-major, width*height bytes). */
export function encodeGrayPng(width: number, height: number, pixels: Uint8Array): Uint8Array {
  if (width <= 0 || height <= 0) throw new Error(`invalid dimensions ${width}x${height}`);
  if (pixels.length !== width * height) {
    throw new Error(`expected ${width * height} pixels, got ${pixels.length}`);
  }
  const ihdr = new Uint8Array([...u32be(width), ...u32be(height), 8, 0, 0, 0, 0]);
  const raw = new Uint8Array(height * (width + 1)); // each row: filter byte 0 + pixels
  for (let y = 0; y < height; y++) {
    raw.set(pixels.subarray(y * width, (y + 1) * width), y * (width + 1) + 1);
  }
  const parts = [
    new Uint8Array(SIGNATURE),
    chunk("IHDR", ihdr),
    chunk("IDAT", zlibStored(raw)),
    chunk("IEND", new Uint8Array(0)),
  ];
  const total = parts.reduce((n, p) => n + p.length, 0);
  const out = new Uint8Array(total);
  let at = 0;
  for (const part of parts) {
    out.set(part, at);
    at += part.length;
  }
  return out;
}

export interface DecodedGrayPng {
  width: number;
  height: number;
  bitDepth: number;
  colorType: number;
  pixels: Uint8Array;
}

function readU32(bytes: Uint8Array, at: number): number {
  return ((bytes[at] << 24) | (bytes[at + 1] << 16) | (bytes[at + 2] << 8) | bytes[at + 3]) >>> 0;
}

export function readPngHeader(bytes: Uint8Array): { width: number; height: number; bitDepth: number; colorType: number } {
  for (let i = 0; i < 8; i++) {
    if (bytes[i] !== SIGNATURE[i]) throw new Error("not a PNG");
  }
  // first chunk must be IHDR at offset 8
  const type = String.fromCharCode(bytes[12], bytes[13], bytes[14], bytes[15]);
  if (type !== "IHDR") throw new Error("missing IHDR");
  return {
    width: readU32(bytes, 16),
    height: readU32(bytes, 20),
    bitDepth: bytes[24],
    colorType: bytes[25],
  };
}

function inflateStored(zlib: Uint8Array): Uint8Array {
  let at = 2; // skip zlib header
  const out: number[] = [];
  for (;;) {
    const header = zlib[at++];
    if ((header & 0x06) !== 0) throw new Error("decoder supports stored deflate blocks only");
    const len = zlib[at] | (zlib[at + 1] << 8);
    at += 4; // LEN + NLEN
    for (let i = 0; i < len; i++) out.push(zlib[at + i]);
    at += len;
    if (header & 1) break;
  }
  const raw = new Uint8Array(out);
  const expected = readU32(zlib, at);
  if (adler32(raw) !== expected) throw new Error("adler32 mismatch");
  return raw;
}

/** Decode a grayscale PNG produced by encodeGrayPng (stored blocks, filter 0). */
export function decodeGrayPng(bytes: Uint8Array): DecodedGrayPng {
  const header = readPngHeader(bytes);
  if (header.colorType !== 0 || header.bitDepth !== 8) {
    throw new Error("decoder supports 8-bit grayscale only");
  }
  const idat: number[] = [];
  let at = 8;
  while (at < bytes.length) {
    const len = readU32(bytes, at);
    const type = String.fromCharCode(bytes[at + 4], bytes[at + 5], bytes[at + 6], bytes[at + 7]);
    const body = bytes.subarray(at + 8, at + 8 + len);
    const crcStored = readU32(bytes, at + 8 + len);
    const withType = new Uint8Array(4 + len);
    withType.set(bytes.subarray(at + 4, at + 8), 0);
    withType.set(body, 4);
    if (crc32(withType) !== crcStored) throw new Error(`bad crc in ${type}`);
    if (type === "IDAT") idat.push(...body);
    at += 12 + len;
    if (type === "IEND") break;
  }
  const raw = inflateStored(new Uint8Array(idat));
  const { width, height } = header;
  const pixels = new Uint8Array(width * height);
  for (let y = 0; y < height; y++) {
    if (raw[y * (width + 1)] !== 0) throw new Error("decoder supports filter 0 only");
    pixels.set(raw.subarray(y * (width + 1) + 1, (y + 1) * (width + 1)), y * width);
  }
  return { ...header, pixels };
}
