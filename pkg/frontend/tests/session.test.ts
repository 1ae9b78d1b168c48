import { describe, expect, it } from 'vitest';

import { clampScore, ScoringSession, validateRecord } from '../src/session.js';
import { CRITERIA, makeSheet, MemoryStore } from './helpers.js';

function completeSession(session: ScoringSession, score = 5): void {
  while (true) {
    for (const criterion of CRITERIA) session.recordScore(criterion, score);
    if (!session.canAdvance()) break;
    session.next();
  }
}

describe('screen ordering and progress', () => {
  it('walks query-major, system-minor', () => {
    const session = new ScoringSession(makeSheet(), 'scorer1');
    expect(session.screens.map((s) => `${s.queryId}/${s.system}`)).toEqual([
      'q0/sysA',
      'q0/sysB',
      'q1/sysA',
      'q1/sysB',
    ]);
    expect(session.progress()).toEqual({ done: 0, total: 4 });
  });

  it('gates next on a complete screen', () => {
    const session = new ScoringSession(makeSheet(), 'scorer1');
    expect(session.canAdvance()).toBe(false);
    expect(() => session.next()).toThrow(/complete every criterion/);
    for (const criterion of CRITERIA.slice(0, 6)) session.recordScore(criterion, 4);
    expect(session.canAdvance()).toBe(false);
    session.recordScore('Shape Difference', 9);
    expect(session.canAdvance()).toBe(true);
    session.next();
    expect(session.cursor).toBe(1);
  });
});

describe('score recording', () => {
  it('clamps out-of-range and non-integer input onto the 0-10 integer scale', () => {
    expect(clampScore(15)).toBe(10);
    expect(clampScore(-3)).toBe(0);
    expect(clampScore(7.4)).toBe(7);
    expect(clampScore(Number.NaN)).toBe(0);
    const session = new ScoringSession(makeSheet(), 'scorer1');
    expect(session.recordScore('Color', 999)).toBe(10);
    expect(session.scoreFor(session.currentScreen(), 'Color')).toBe(10);
  });

  it('overwrites rather than duplicating a criterion score', () => {
    const session = new ScoringSession(makeSheet(), 'scorer1');
    session.recordScore('Color', 2);
    session.recordScore('Color', 8);
    expect(session.scoreFor(session.currentScreen(), 'Color')).toBe(8);
  });

  it('rejects unknown criteria', () => {
    const session = new ScoringSession(makeSheet(), 'scorer1');
    expect(() => session.recordScore('Sparkle', 5)).toThrow(/unknown criterion/);
  });
});

describe('record building', () => {
  it('a 2x2x7 session posts exactly 28 entries that validate cleanly', () => {
    const sheet = makeSheet();
    const session = new ScoringSession(sheet, 'scorer1');
    expect(() => session.buildRecord()).toThrow(/incomplete/);
    completeSession(session, 6);
    const record = session.buildRecord();
    expect(record.entries).toHaveLength(28);
    expect(record.sheet_id).toBe('sheet-1');
    expect(record.scorer_id).toBe('scorer1');
    expect(validateRecord(sheet, record)).toEqual([]);
    for (const entry of record.entries) {
      expect(Number.isInteger(entry.score)).toBe(true);
      expect(entry.score).toBeGreaterThanOrEqual(0);
      expect(entry.score).toBeLessThanOrEqual(10);
    }
  });

  it('validateRecord mirrors the service rules', () => {
    const sheet = makeSheet();
    const bad = {
      sheet_id: 'other-sheet',
      scorer_id: 's',
      entries: [
        { query_id: 'q0', system: 'sysA', criterion: 'Color', score: 11 },
        { query_id: 'q0', system: 'sysA', criterion: 'Color', score: 11 },
        { query_id: 'zz', system: 'sysX', criterion: 'Sparkle', score: 2.5 },
      ],
    };
    const violations = validateRecord(sheet, bad);
    expect(violations.some((v) => v.includes('sheet mismatch'))).toBe(true);
    expect(violations.some((v) => v.includes('out of range'))).toBe(true);
    expect(violations.some((v) => v.includes('duplicate'))).toBe(true);
    expect(violations.some((v) => v.includes('unknown query'))).toBe(true);
    expect(violations.some((v) => v.includes('non-integer'))).toBe(true);
  });
});

describe('draft persistence', () => {
  it('drafts and cursor survive a reload', () => {
    const sheet = makeSheet();
    const store = new MemoryStore();
    const first = new ScoringSession(sheet, 'scorer1', store);
    for (const criterion of CRITERIA) first.recordScore(criterion, 3);
    first.next();
    first.recordScore('Color', 9);

    const reloaded = new ScoringSession(sheet, 'scorer1', store);
    expect(reloaded.cursor).toBe(1);
    expect(reloaded.scoreFor(reloaded.screens[0]!, 'Variety')).toBe(3);
    expect(reloaded.scoreFor(reloaded.currentScreen(), 'Color')).toBe(9);
    expect(reloaded.progress().done).toBe(1);
  });

  it('drafts are scoped per scorer and sheet', () => {
    const store = new MemoryStore();
    const a = new ScoringSession(makeSheet(), 'alice', store);
    a.recordScore('Color', 7);
    const b = new ScoringSession(makeSheet(), 'bob', store);
    expect(b.scoreFor(b.currentScreen(), 'Color')).toBeUndefined();
  });

  it('corrupt drafts are dropped, not fatal', () => {
    const store = new MemoryStore();
    store.setItem('grec.drafts.sheet-1.scorer1', '{nope');
    const session = new ScoringSession(makeSheet(), 'scorer1', store);
    expect(session.progress().done).toBe(0);
  });
});

describe('blinding and submission', () => {
  it('hides raw system names until submitted', () => {
    const session = new ScoringSession(makeSheet(), 'scorer1');
    for (const screen of session.screens) {
      expect(screen.blindLabel).toMatch(/^System [A-Z]$/);
      expect(screen.blindLabel).not.toContain(screen.system);
    }
    expect(session.revealSystem('System A')).toBeNull();
    completeSession(session);
    session.markSubmitted();
    expect(session.revealSystem('System A')).toBe('sysA');
    expect(session.revealSystem('System B')).toBe('sysB');
  });

  it('labels are stable within a session', () => {
    const session = new ScoringSession(makeSheet(3), 'scorer1');
    const labels = new Map<string, string>();
    for (const screen of session.screens) {
      const existing = labels.get(screen.system);
      if (existing) expect(screen.blindLabel).toBe(existing);
      labels.set(screen.system, screen.blindLabel);
    }
  });

  it('session becomes read-only after submit', () => {
    const store = new MemoryStore();
    const session = new ScoringSession(makeSheet(), 'scorer1', store);
    completeSession(session);
    session.markSubmitted();
    expect(() => session.recordScore('Color', 5)).toThrow(/read-only/);
    const reloaded = new ScoringSession(makeSheet(), 'scorer1', store);
    expect(reloaded.submitted).toBe(true);
  });
});
