// Thin fetch wrappers over the scoring service.

import type { Sheet, ScoreRecord } from './types.js';

export type PostResult =
  | { ok: true; entries: number }
  | { ok: false; violations: string[] };

export async function fetchSheet(baseUrl: string, sheetId: string): Promise<Sheet> {
  const response = await fetch(`${baseUrl}/sheets/${encodeURIComponent(sheetId)}`);
  if (!response.ok) {
    throw new Error(`sheet ${sheetId} not available (HTTP ${response.status})`);
  }
  return (await response.json()) as Sheet;
}

export async function postScores(baseUrl: string, record: ScoreRecord): Promise<PostResult> {
  const response = await fetch(
    `${baseUrl}/sheets/${encodeURIComponent(record.sheet_id)}/scores`,
    {
      method: 'POST',
      headers: { 'Content-Type': 'application/json' },
      body: JSON.stringify(record),
    },
  );
  if (response.status === 422) {
    const body = (await response.json()) as { violations: string[] };
    return { ok: false, violations: body.violations };
  }
  if (!response.ok) {
    throw new Error(`submit failed (HTTP ${response.status})`);
  }
  const body = (await response.json()) as { entries: number };
  return { ok: true, entries: body.entries };
}

export function itemImageUrl(baseUrl: string, imageRef: string): string {
  // Absolute refs are used as-is; bare paths are left for the host to serve.
  if (/^(https?:)?\/\//.test(imageRef) || imageRef.startsWith('/')) return imageRef;
  return `${baseUrl.replace(/\/$/, '')}/${imageRef}`;
}
