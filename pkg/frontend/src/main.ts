// Boot: read sheet/scorer from the URL (or a small start form), load the
// sheet, then drive the screen-by-screen scoring flow.

import { fetchSheet, postScores } from './api.js';
import { ScoringSession } from './session.js';
import { el, renderDone, renderError, renderScreen, renderViolations } from './ui.js';
import type { Sheet } from './types.js';

// The UI is served from /ui/, so the service root is one level up.
const BASE_URL = window.location.pathname.startsWith('/ui') ? '' : '';

function startForm(root: HTMLElement): void {
  const form = el('form', 'start-form');
  const sheetInput = el('input');
  sheetInput.placeholder = 'sheet id';
  sheetInput.required = true;
  const scorerInput = el('input');
  scorerInput.placeholder = 'your scorer id';
  scorerInput.required = true;
  const go = el('button', undefined, 'Start scoring');
  go.type = 'submit';
  form.append(
    el('h1', undefined, 'Recommendation scoring'),
    sheetInput,
    scorerInput,
    go,
  );
  form.addEventListener('submit', (event) => {
    event.preventDefault();
    const params = new URLSearchParams({
      sheet: sheetInput.value.trim(),
      scorer: scorerInput.value.trim(),
    });
    window.location.search = params.toString();
  });
  root.replaceChildren(form);
}

async function boot(root: HTMLElement): Promise<void> {
  const params = new URLSearchParams(window.location.search);
  const sheetId = params.get('sheet');
  const scorerId = params.get('scorer');
  if (!sheetId || !scorerId) {
    startForm(root);
    return;
  }

  let sheet: Sheet;
  try {
    sheet = await fetchSheet(BASE_URL, sheetId);
  } catch (error) {
    // Drafts live in localStorage, so a failed load loses nothing.
    root.replaceChildren(
      renderError(`Could not load sheet: ${String(error)}`, () => void boot(root)),
    );
    return;
  }

  const session = new ScoringSession(sheet, scorerId, window.localStorage);
  const rerender = (extra?: HTMLElement) => {
    if (session.submitted) {
      root.replaceChildren(renderDone(session));
      return;
    }
    const screen = renderScreen(BASE_URL, sheet, session, {
      onPrev: () => {
        session.prev();
        rerender();
      },
      onNext: () => {
        session.next();
        rerender();
      },
      onSubmit: () => void submit(),
    });
    root.replaceChildren(screen);
    if (extra) root.append(extra);
  };

  const submit = async () => {
    try {
      const result = await postScores(BASE_URL, session.buildRecord());
      if (result.ok) {
        session.markSubmitted();
        rerender();
      } else {
        rerender(renderViolations(result.violations));
      }
    } catch (error) {
      rerender(renderError(`Submit failed, drafts kept: ${String(error)}`, () => void submit()));
    }
  };

  rerender();
}

const root = document.getElementById('app');
if (root) void boot(root);
