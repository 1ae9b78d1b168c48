// Wire types shared with the scoring service.

export interface Criterion {
  name: string;
  weight: number;
  description: string;
}

export interface SheetQuery {
  query_id: string;
  image: string;
  domain: 'shop' | 'street';
  results: Record<string, string[]>;
}

export interface Sheet {
  sheet_id: string;
  criteria: Criterion[];
  systems: string[];
  queries: SheetQuery[];
}

export interface ScoreEntry {
  query_id: string;
  system: string;
  criterion: string;
  score: number;
}

export interface ScoreRecord {
  sheet_id: string;
  scorer_id: string;
  entries: ScoreEntry[];
}
