import { beforeEach, describe, expect, it } from 'vitest';

import { createReviewBoard } from '../src/reviewBoard';
import type { SpecPayload } from '../src/types';
import { FakeApi } from './fakeApi';

const SPEC: SpecPayload = {
  kind: 'MultipleChoice',
  target_language: 'Python',
  scope_topics: ['loops'],
  total: 3,
  distribution: { '1': 1, '2': 1, '3': 1, '4': 0, '5': 0 },
  enabled_types: ['OutputOrErrorSelection'],
  criteria: ['Single-topic questions'],
  role_noun: 'expert',
  few_shot_examples: null,
};

async function setupBoard() {
  document.body.innerHTML = '<div id="host"></div>';
  const api = new FakeApi();
  const { job_id } = await api.createJob(SPEC);
  const board = createReviewBoard(
    document.getElementById('host') as HTMLElement, api, job_id,
    { pollIntervalMs: 1 });
  await board.ready;
  return { api, board, jobId: job_id };
}

const flush = () => new Promise((resolve) => setTimeout(resolve, 0));

describe('review board', () => {
  beforeEach(() => {
    document.body.innerHTML = '';
  });

  it('polls to Validated and renders one card per question', async () => {
    const { board } = await setupBoard();
    const cards = board.element.querySelectorAll('.question-card');
    expect(cards).toHaveLength(3);
    expect(board.element.querySelectorAll('.difficulty-badge')[0].textContent).toBe('1/5');
    expect(cards[0].querySelector('.stem')!.textContent).toContain('Sample stem 1');
  });

  it('renders a failure line for failed jobs', async () => {
    document.body.innerHTML = '<div id="host"></div>';
    const api = new FakeApi();
    const { job_id } = await api.createJob(SPEC);
    const job = api.jobs.get(job_id)!;
    job.reason = 'FixtureMiss: nothing registered';
    const board = createReviewBoard(
      document.getElementById('host') as HTMLElement, api, job_id,
      { pollIntervalMs: 1 });
    await board.ready;
    expect(board.element.textContent).toContain('Generation failed');
    expect(board.element.textContent).toContain('FixtureMiss');
  });

  it('accept locks the card into a terminal state', async () => {
    const { board } = await setupBoard();
    (board.element.querySelector('button[data-accept]') as HTMLButtonElement).click();
    await flush();
    const card = board.element.querySelector('.question-card') as HTMLElement;
    expect(card.classList.contains('card-accepted')).toBe(true);
    // terminal: no status controls remain, only nothing or disabled extras
    expect(card.querySelector('button[data-accept]')).toBeNull();
    expect(card.querySelector('button[data-reject]')).toBeNull();
  });

  it('reject exposes a regenerate action that fills the same slot', async () => {
    const { api, board } = await setupBoard();
    const firstId = board.questions()[0].id;
    (board.element.querySelector(`button[data-reject="${firstId}"]`) as HTMLButtonElement).click();
    await flush();
    const regen = board.element.querySelector(
      `button[data-regenerate="${firstId}"]`) as HTMLButtonElement;
    expect(regen).not.toBeNull();

    regen.click();
    await new Promise((resolve) => setTimeout(resolve, 20));
    const stems = [...board.element.querySelectorAll('.stem')].map((el) => el.textContent);
    expect(stems.some((s) => s!.includes('Regenerated stem for slot 1'))).toBe(true);
    // the rejected original is retained alongside the replacement
    expect(board.questions()).toHaveLength(4);
    const slotCards = board.questions().filter((q) => q.ordinal === 1);
    expect(new Set(slotCards.map((q) => q.status))).toEqual(new Set(['Rejected', 'Draft']));
    expect(api.jobs.size).toBe(2);
  });

  it('surfaces 409 inline and rolls the optimistic flip back', async () => {
    const { api, board } = await setupBoard();
    const firstId = board.questions()[0].id;
    // the server state moves behind the UI's back, so the rendered
    // Reject control is stale and the request will 409
    await api.curate(firstId, { action: 'accept' });

    const staleReject = board.element.querySelector(
      `button[data-reject="${firstId}"]`) as HTMLButtonElement;
    expect(staleReject).not.toBeNull();
    staleReject.click();
    await flush();

    const card = board.element.querySelector(
      `article[data-question="${firstId}"]`) as HTMLElement;
    expect(card.querySelector('.inline-error')!.textContent).toContain('Not allowed');
    // optimistic flip rolled back to the last known state, not Rejected
    expect(board.questions()[0].status).toBe('Draft');
    expect(card.querySelector('.status-badge')!.textContent).toBe('Draft');
  });

  it('edit round-trips and re-renders fresh findings', async () => {
    const { board } = await setupBoard();
    const firstId = board.questions()[0].id;
    (board.element.querySelector(`button[data-edit="${firstId}"]`) as HTMLButtonElement).click();
    const stemArea = board.element.querySelector(
      `textarea[data-edit-stem="${firstId}"]`) as HTMLTextAreaElement;
    stemArea.value = 'A fresh stem?';
    stemArea.dispatchEvent(new Event('input', { bubbles: true }));
    (board.element.querySelector(`button[data-save-edit="${firstId}"]`) as HTMLButtonElement).click();
    await flush();
    expect(board.questions()[0].stem).toBe('A fresh stem?');
    expect(board.element.querySelector('.inline-error')).toBeNull();
  });

  it('a 422 edit shows inline and keeps the draft text', async () => {
    const { board } = await setupBoard();
    const firstId = board.questions()[0].id;
    (board.element.querySelector(`button[data-edit="${firstId}"]`) as HTMLButtonElement).click();

    const answerInput = board.element.querySelector(
      `input[data-edit-answer="${firstId}"]`) as HTMLInputElement;
    answerInput.value = 'z';
    answerInput.dispatchEvent(new Event('input', { bubbles: true }));
    const stemArea = board.element.querySelector(
      `textarea[data-edit-stem="${firstId}"]`) as HTMLTextAreaElement;
    stemArea.value = 'Typed but not lost';
    stemArea.dispatchEvent(new Event('input', { bubbles: true }));

    (board.element.querySelector(`button[data-save-edit="${firstId}"]`) as HTMLButtonElement).click();
    await flush();

    const error = board.element.querySelector('.inline-error') as HTMLElement;
    expect(error.textContent).toContain('label z not among');
    // editor still open, draft preserved
    const reopened = board.element.querySelector(
      `textarea[data-edit-stem="${firstId}"]`) as HTMLTextAreaElement;
    expect(reopened.value).toBe('Typed but not lost');
    expect(board.questions()[0].stem).toContain('Sample stem 1');
  });
});
