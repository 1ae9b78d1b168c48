// DOM rendering for the scoring flow. No framework: each function builds
// plain elements so the pieces stay testable in isolation.

import { itemImageUrl } from './api.js';
import { ScoringSession, SCORE_MAX, SCORE_MIN } from './session.js';
import type { Criterion, Sheet, SheetQuery } from './types.js';

export function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

/** Integer 0-10 slider; the control itself makes out-of-range input impossible. */
export function renderScoreInput(
  criterion: Criterion,
  current: number | undefined,
  onChange: (value: number) => number,
): HTMLElement {
  const row = el('div', 'criterion-row');
  row.dataset.criterion = criterion.name;

  const label = el('label', 'criterion-name', criterion.name);
  const description = el('p', 'criterion-description', criterion.description);
  const value = el('output', 'criterion-value', current === undefined ? '-' : String(current));

  const input = el('input', 'criterion-slider');
  input.type = 'range';
  input.min = String(SCORE_MIN);
  input.max = String(SCORE_MAX);
  input.step = '1';
  input.value = current === undefined ? '0' : String(current);
  if (current === undefined) input.dataset.untouched = 'true';
  input.addEventListener('input', () => {
    const stored = onChange(Number(input.value));
    input.value = String(stored);
    value.textContent = String(stored);
    delete input.dataset.untouched;
  });

  label.append(value);
  row.append(label, description, input);
  return row;
}

export function renderResultGrid(baseUrl: string, query: SheetQuery, system: string): HTMLElement {
  const grid = el('div', 'result-grid');
  const ids = query.results[system] ?? [];
  ids.forEach((itemId, rank) => {
    const cell = el('figure', 'result-cell');
    const img = el('img', 'result-image');
    img.alt = itemId;
    img.loading = 'lazy';
    img.addEventListener('error', () => {
      img.replaceWith(el('div', 'result-placeholder', itemId));
    });
    // The image reference comes from the item metadata endpoint.
    fetch(`${baseUrl}/items/${encodeURIComponent(itemId)}`)
      .then((response) => (response.ok ? response.json() : Promise.reject(response.status)))
      .then((item: { image: string }) => {
        img.src = itemImageUrl(baseUrl, item.image);
      })
      .catch(() => {
        img.replaceWith(el('div', 'result-placeholder', itemId));
      });
    const caption = el('figcaption', 'result-rank', `#${rank + 1}`);
    cell.append(img, caption);
    grid.append(cell);
  });
  return grid;
}

export interface ScreenHandlers {
  onPrev(): void;
  onNext(): void;
  onSubmit(): void;
}

export function renderScreen(
  baseUrl: string,
  sheet: Sheet,
  session: ScoringSession,
  handlers: ScreenHandlers,
): HTMLElement {
  const screen = session.currentScreen();
  const query = sheet.queries.find((q) => q.query_id === screen.queryId)!;
  const container = el('section', 'screen');

  const progress = session.progress();
  const header = el('header', 'screen-header');
  header.append(
    el('h2', 'screen-title', `${screen.blindLabel} - query ${query.query_id}`),
    el('span', 'screen-domain', query.domain),
    el('span', 'screen-progress', `${progress.done}/${progress.total} screens complete`),
  );

  const queryPane = el('div', 'query-pane');
  const queryImg = el('img', 'query-image');
  queryImg.alt = query.query_id;
  queryImg.src = itemImageUrl(baseUrl, query.image);
  queryImg.addEventListener('error', () => {
    queryImg.replaceWith(el('div', 'result-placeholder', query.query_id));
  });
  queryPane.append(queryImg, renderResultGrid(baseUrl, query, screen.system));

  const panel = el('div', 'criteria-panel');
  for (const criterion of sheet.criteria) {
    panel.append(
      renderScoreInput(criterion, session.scoreFor(screen, criterion.name), (value) =>
        session.recordScore(criterion.name, value),
      ),
    );
  }

  const nav = el('nav', 'screen-nav');
  const prev = el('button', 'nav-prev', 'Back');
  prev.disabled = session.cursor === 0;
  prev.addEventListener('click', handlers.onPrev);
  const next = el('button', 'nav-next', 'Next');
  next.disabled = !session.canAdvance();
  const submit = el('button', 'nav-submit', 'Submit all scores');
  submit.disabled = !session.isComplete();
  next.addEventListener('click', handlers.onNext);
  submit.addEventListener('click', handlers.onSubmit);
  if (session.cursor === session.screens.length - 1) {
    nav.append(prev, submit);
  } else {
    nav.append(prev, next, submit);
  }

  container.append(header, queryPane, panel, nav);
  return container;
}

export function renderViolations(violations: string[]): HTMLElement {
  const box = el('div', 'violations');
  box.append(el('h3', undefined, 'The service rejected the record:'));
  const list = el('ul');
  for (const violation of violations) {
    list.append(el('li', undefined, violation));
  }
  box.append(list);
  return box;
}

export function renderDone(session: ScoringSession): HTMLElement {
  const box = el('div', 'done');
  box.append(
    el('h2', undefined, 'Scores submitted - thank you!'),
    el('p', undefined, 'This session is now read-only. System identities:'),
  );
  const list = el('ul');
  for (const screen of session.screens.slice(0, session.sheet.systems.length)) {
    list.append(
      el('li', undefined, `${screen.blindLabel} = ${session.revealSystem(screen.blindLabel) ?? '?'}`),
    );
  }
  box.append(list);
  return box;
}

export function renderError(message: string, onRetry: () => void): HTMLElement {
  const box = el('div', 'load-error');
  box.append(el('p', undefined, message));
  const retry = el('button', 'retry', 'Retry');
  retry.addEventListener('click', onRetry);
  box.append(retry);
  return box;
}
