/**
 * Grid cell codec: base64-wrapped run-length encoding of (value, count<=255)
 * byte pairs, cells row-major from row 0. 0 FREE, 1 OCCUPIED, 2 UNKNOWN.
 */

export const FREE = 0;
export const OCCUPIED = 1;
export const UNKNOWN = 2;

function bytesFromBase64(b64: string): Uint8Array {
  const binary = atob(b64);
  const out = new Uint8Array(binary.length);
  for (let i = 0; i < binary.length; i++) {
    out[i] = binary.charCodeAt(i);
  }
  return out;
}

function base64FromBytes(bytes: Uint8Array): string {
  let binary = "";
  for (let i = 0; i < bytes.length; i++) {
    binary += String.fromCharCode(bytes[i]);
  }
  return btoa(binary);
}

export function decodeCells(b64: string, expected: number): Uint8Array {
  let blob: Uint8Array;
  try {
    blob = bytesFromBase64(b64);
  } catch {
    throw new Error("grid cells are not valid base64");
  }
  if (blob.length % 2 !== 0) {
    throw new Error("RLE stream has odd length");
  }
  const out = new Uint8Array(expected);
  let at = 0;
  for (let i = 0; i < blob.length; i += 2) {
    const value = blob[i];
    const run = blob[i + 1];
    if (run === 0) {
      throw new Error("RLE run length of zero");
    }
    if (at + run > expected) {
      throw new Error(`RLE decodes past ${expected} cells`);
    }
    out.fill(value, at, at + run);
    at += run;
  }
  if (at !== expected) {
    throw new Error(`RLE decodes to ${at} cells, expected ${expected}`);
  }
  return out;
}

export function encodeCells(cells: Uint8Array): string {
  const bytes: number[] = [];
  let i = 0;
  while (i < cells.length) {
    const value = cells[i];
    let run = 1;
    while (i + run < cells.length && cells[i + run] === value && run < 255) {
      run++;
    }
    bytes.push(value, run);
    i += run;
  }
  return base64FromBytes(Uint8Array.from(bytes));
}
