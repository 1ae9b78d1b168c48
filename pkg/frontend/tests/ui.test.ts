// @vitest-environment jsdom
import { afterEach, beforeEach, describe, expect, it, vi } from 'vitest';

import { ScoringSession } from '../src/session.js';
import { renderScoreInput, renderScreen, renderViolations } from '../src/ui.js';
import { makeSheet } from './helpers.js';

beforeEach(() => {
  window.localStorage.clear();
  vi.stubGlobal(
    'fetch',
    vi.fn(async (url: string) => ({
      ok: true,
      status: 200,
      json: async () => ({ id: 'x', image: `images/${url.split('/').pop()}.png` }),
    })),
  );
});

afterEach(() => {
  vi.unstubAllGlobals();
});

const noHandlers = { onPrev() {}, onNext() {}, onSubmit() {} };

describe('score input control', () => {
  it('is a 0-10 integer slider, so out-of-range values are unenterable', () => {
    const criterion = { name: 'Color', weight: 1, description: 'dominant color' };
    const row = renderScoreInput(criterion, undefined, (v) => Math.min(10, Math.max(0, Math.round(v))));
    const input = row.querySelector('input')!;
    expect(input.type).toBe('range');
    expect(input.min).toBe('0');
    expect(input.max).toBe('10');
    expect(input.step).toBe('1');
    // Even a forced DOM value is clamped by the control itself.
    input.value = '17';
    expect(input.value).toBe('10');
    input.value = '-4';
    expect(input.value).toBe('0');
  });

  it('stores the change through the callback and shows the value', () => {
    const criterion = { name: 'Color', weight: 1, description: '' };
    let stored = -1;
    const row = renderScoreInput(criterion, undefined, (v) => (stored = v));
    const input = row.querySelector('input')!;
    input.value = '7';
    input.dispatchEvent(new Event('input'));
    expect(stored).toBe(7);
    expect(row.querySelector('output')!.textContent).toBe('7');
  });
});

describe('screen rendering', () => {
  it('shows the blinded label, never the raw system name', () => {
    const sheet = makeSheet();
    const session = new ScoringSession(sheet, 'scorer1', window.localStorage);
    const screen = renderScreen('', sheet, session, noHandlers);
    const title = screen.querySelector('.screen-title')!.textContent!;
    expect(title).toContain('System A');
    expect(title).not.toContain('sysA');
    expect(screen.textContent).not.toContain('sysA');
    expect(screen.textContent).not.toContain('sysB');
  });

  it('renders one slider per criterion and a result cell per item', () => {
    const sheet = makeSheet();
    const session = new ScoringSession(sheet, 'scorer1', window.localStorage);
    const screen = renderScreen('', sheet, session, noHandlers);
    expect(screen.querySelectorAll('.criterion-row')).toHaveLength(7);
    expect(screen.querySelectorAll('.result-cell')).toHaveLength(10);
  });

  it('keeps next disabled until every criterion is scored', () => {
    const sheet = makeSheet();
    const session = new ScoringSession(sheet, 'scorer1', window.localStorage);
    let screen = renderScreen('', sheet, session, noHandlers);
    expect(screen.querySelector<HTMLButtonElement>('.nav-next')!.disabled).toBe(true);
    for (const criterion of sheet.criteria) session.recordScore(criterion.name, 5);
    screen = renderScreen('', sheet, session, noHandlers);
    expect(screen.querySelector<HTMLButtonElement>('.nav-next')!.disabled).toBe(false);
  });

  it('drafts written through the UI survive a reload via localStorage', () => {
    const sheet = makeSheet();
    const session = new ScoringSession(sheet, 'scorer1', window.localStorage);
    const screen = renderScreen('', sheet, session, noHandlers);
    const slider = screen.querySelector<HTMLInputElement>('.criterion-slider')!;
    slider.value = '6';
    slider.dispatchEvent(new Event('input'));

    const reloaded = new ScoringSession(sheet, 'scorer1', window.localStorage);
    expect(reloaded.scoreFor(reloaded.screens[0]!, sheet.criteria[0]!.name)).toBe(6);
  });
});

describe('violation display', () => {
  it('lists every violation from a 422', () => {
    const box = renderViolations(['a out of range', 'b duplicate']);
    const items = [...box.querySelectorAll('li')].map((li) => li.textContent);
    expect(items).toEqual(['a out of range', 'b duplicate']);
  });
});
