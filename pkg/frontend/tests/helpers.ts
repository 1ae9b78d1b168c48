import type { DraftStore } from '../src/session.js';
import type { Sheet } from '../src/types.js';

export const CRITERIA = [
  'Category',
  'Subtype',
  'Fabric/Texture',
  'Color',
  'Variety',
  'Details',
  'Shape Difference',
];

export function makeSheet(nQueries = 2, systems = ['sysA', 'sysB']): Sheet {
  const queries = [];
  for (let i = 0; i < nQueries; i++) {
    const results: Record<string, string[]> = {};
    for (const system of systems) {
      results[system] = Array.from({ length: 10 }, (_, j) => `item${i}${j}`);
    }
    queries.push({
      query_id: `q${i}`,
      image: `images/q${i}.png`,
      domain: (i % 2 === 0 ? 'shop' : 'street') as 'shop' | 'street',
      results,
    });
  }
  return {
    sheet_id: 'sheet-1',
    criteria: CRITERIA.map((name) => ({ name, weight: 1, description: `${name} facet` })),
    systems,
    queries,
  };
}

export class MemoryStore implements DraftStore {
  private map = new Map<string, string>();
  getItem(key: string) {
    return this.map.get(key) ?? null;
  }
  setItem(key: string, value: string) {
    this.map.set(key, value);
  }
  removeItem(key: string) {
    this.map.delete(key);
  }
}
