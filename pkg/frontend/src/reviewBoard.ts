import { ApiError, type Api } from './api.js';
import { escapeHtml, highlight } from './highlight.js';
import { pollJob } from './poll.js';
import type { AnswerPayload, CurationStatus, JobView, QuestionView } from './types.js';

export interface ReviewBoardOptions {
  pollIntervalMs?: number;
  onStateChange?: (job: JobView) => void;
}

export interface ReviewBoardHandle {
  element: HTMLElement;
  ready: Promise<void>;
  refresh(): Promise<void>;
  questions(): QuestionView[];
}

function answerSummary(answer: AnswerPayload): string {
  switch (answer.type) {
    case 'single_option':
      return `Answer: ${escapeHtml(answer.label)}`;
    case 'multi_option':
      return `Answer: ${answer.labels.map(escapeHtml).join(', ')}`;
    case 'text':
      return `Answer: ${escapeHtml(answer.text)}`;
    case 'code':
      return `<div>Answer code:</div><pre class="code">${highlight(
        answer.code.source, answer.code.language_hint)}</pre>${
        answer.expected_behavior ? escapeHtml(answer.expected_behavior) : ''}`;
  }
}

/** The instructor's curation board for one generation job. */
export function createReviewBoard(
  container: HTMLElement,
  api: Api,
  jobId: string,
  options: ReviewBoardOptions = {},
): ReviewBoardHandle {
  const root = document.createElement('section');
  root.className = 'review-board';
  root.innerHTML = `<p class="board-state">Waiting for job ${escapeHtml(jobId)}…</p>`;
  container.appendChild(root);

  let questions: QuestionView[] = [];
  // editor drafts survive re-renders so a 422 never loses typed text
  const editDrafts = new Map<string, { stem: string; explanation: string; answerLabel: string }>();
  const openEditors = new Set<string>();
  const inlineErrors = new Map<string, string>();

  async function refresh(): Promise<void> {
    questions = await api.listQuestions(jobId);
    render();
  }

  function badge(status: CurationStatus): string {
    return `<span class="status-badge status-${status.toLowerCase()}">${status}</span>`;
  }

  function card(question: QuestionView): string {
    const findings = question.validation
      .map((f) => `<span class="finding finding-${f.severity.toLowerCase()}" title="${escapeHtml(f.message)}">${escapeHtml(f.code)}</span>`)
      .join(' ');
    const code = question.code_blocks
      .map((b) => `<pre class="code">${highlight(b.source, b.language_hint)}</pre>`)
      .join('');
    const optionList = question.options.length
      ? `<ul class="options">${question.options
          .map((o) => `<li><strong>${escapeHtml(o.label)})</strong> ${escapeHtml(o.text)}</li>`)
          .join('')}</ul>`
      : '';
    const difficulty = question.difficulty !== null
      ? `<span class="difficulty-badge">${question.difficulty}/5</span>`
      : '<span class="difficulty-badge missing">?/5</span>';
    const error = inlineErrors.get(question.id);

    const transitions = question.allowed_transitions;
    const buttons: string[] = [];
    if (transitions.includes('Accepted')) {
      buttons.push(`<button data-accept="${question.id}">Accept</button>`);
    }
    if (transitions.includes('Rejected')) {
      buttons.push(`<button data-reject="${question.id}">Reject</button>`);
    }
    if (question.status === 'Rejected') {
      buttons.push(`<button data-regenerate="${question.id}">Regenerate</button>`);
    }
    if (question.status !== 'Accepted') {
      buttons.push(`<button data-edit="${question.id}">${openEditors.has(question.id) ? 'Close editor' : 'Edit'}</button>`);
    }

    const draft = editDrafts.get(question.id) ?? {
      stem: question.stem,
      explanation: question.explanation,
      answerLabel: question.answer.type === 'single_option' ? question.answer.label : '',
    };
    const editor = openEditors.has(question.id)
      ? `<div class="editor" data-editor="${question.id}">
          <label>Stem <textarea data-edit-stem="${question.id}">${escapeHtml(draft.stem)}</textarea></label>
          ${question.kind === 'MultipleChoice'
            ? `<label>Answer label <input data-edit-answer="${question.id}" value="${escapeHtml(draft.answerLabel)}"></label>`
            : ''}
          <label>Explanation <textarea data-edit-explanation="${question.id}">${escapeHtml(draft.explanation)}</textarea></label>
          <button data-save-edit="${question.id}">Save edit</button>
        </div>`
      : '';

    return `
      <article class="question-card card-${question.status.toLowerCase()}" data-question="${question.id}">
        <header>
          <span class="ordinal">#${question.ordinal}</span>
          ${difficulty}
          ${badge(question.status)}
          <span class="findings">${findings}</span>
        </header>
        <p class="stem">${escapeHtml(question.stem)}</p>
        ${code}
        ${optionList}
        <div class="answer">${answerSummary(question.answer)}</div>
        ${question.explanation ? `<p class="explanation">${escapeHtml(question.explanation)}</p>` : ''}
        ${error ? `<div class="inline-error" role="alert">${escapeHtml(error)}</div>` : ''}
        <footer>${buttons.join(' ')}</footer>
        ${editor}
      </article>`;
  }

  function render(): void {
    root.innerHTML = `<div class="cards">${questions.map(card).join('')}</div>`;
    bind();
  }

  async function setStatus(questionId: string, action: 'accept' | 'reject'): Promise<void> {
    const target: CurationStatus = action === 'accept' ? 'Accepted' : 'Rejected';
    const index = questions.findIndex((q) => q.id === questionId);
    const before = questions[index];
    // optimistic flip, rolled back when the server answers 409
    questions[index] = { ...before, status: target, allowed_transitions: [] };
    inlineErrors.delete(questionId);
    render();
    try {
      questions[index] = await api.curate(questionId, { action });
    } catch (err) {
      questions[index] = before;
      if (err instanceof ApiError && err.status === 409) {
        inlineErrors.set(questionId, `Not allowed: ${String((err.body as any)?.detail ?? err.message)}`);
      } else {
        inlineErrors.set(questionId, String(err));
      }
    }
    render();
  }

  async function saveEdit(questionId: string): Promise<void> {
    const question = questions.find((q) => q.id === questionId);
    const draft = editDrafts.get(questionId);
    if (!question || !draft) return;
    const patch: Record<string, unknown> = {
      stem: draft.stem,
      explanation: draft.explanation,
    };
    if (question.kind === 'MultipleChoice' && draft.answerLabel) {
      patch.answer = { type: 'single_option', label: draft.answerLabel };
    }
    inlineErrors.delete(questionId);
    try {
      const updated = await api.curate(questionId, { action: 'edit', patch } as never);
      const index = questions.findIndex((q) => q.id === questionId);
      questions[index] = updated;
      editDrafts.delete(questionId);
      openEditors.delete(questionId);
    } catch (err) {
      // keep the editor open with the draft intact
      if (err instanceof ApiError && (err.status === 422 || err.status === 409)) {
        const detail = (err.body as any)?.detail;
        const message = typeof detail === 'object' && detail?.findings
          ? detail.findings.map((f: { code: string; message: string }) => f.message).join('; ')
          : String(detail ?? err.message);
        inlineErrors.set(questionId, message);
      } else {
        inlineErrors.set(questionId, String(err));
      }
    }
    render();
  }

  async function regenerate(questionId: string): Promise<void> {
    inlineErrors.delete(questionId);
    try {
      const { job_id } = await api.regenerate(questionId);
      await pollJob(api, job_id, { intervalMs: options.pollIntervalMs ?? 1000 });
      await refresh();
    } catch (err) {
      inlineErrors.set(
        questionId,
        err instanceof ApiError ? `Regeneration refused: ${err.message}` : String(err));
      render();
    }
  }

  function bind(): void {
    root.querySelectorAll<HTMLButtonElement>('button[data-accept]').forEach((el) =>
      el.addEventListener('click', () => void setStatus(el.dataset.accept as string, 'accept')));
    root.querySelectorAll<HTMLButtonElement>('button[data-reject]').forEach((el) =>
      el.addEventListener('click', () => void setStatus(el.dataset.reject as string, 'reject')));
    root.querySelectorAll<HTMLButtonElement>('button[data-regenerate]').forEach((el) =>
      el.addEventListener('click', () => void regenerate(el.dataset.regenerate as string)));
    root.querySelectorAll<HTMLButtonElement>('button[data-edit]').forEach((el) =>
      el.addEventListener('click', () => {
        const id = el.dataset.edit as string;
        if (openEditors.has(id)) openEditors.delete(id);
        else openEditors.add(id);
        render();
      }));
    root.querySelectorAll<HTMLButtonElement>('button[data-save-edit]').forEach((el) =>
      el.addEventListener('click', () => void saveEdit(el.dataset.saveEdit as string)));
    const draftField = (id: string) =>
      editDrafts.get(id) ??
      editDrafts
        .set(id, {
          stem: questions.find((q) => q.id === id)?.stem ?? '',
          explanation: questions.find((q) => q.id === id)?.explanation ?? '',
          answerLabel: (() => {
            const a = questions.find((q) => q.id === id)?.answer;
            return a?.type === 'single_option' ? a.label : '';
          })(),
        })
        .get(id)!;
    root.querySelectorAll<HTMLTextAreaElement>('textarea[data-edit-stem]').forEach((el) =>
      el.addEventListener('input', () => {
        draftField(el.dataset.editStem as string).stem = el.value;
      }));
    root.querySelectorAll<HTMLTextAreaElement>('textarea[data-edit-explanation]').forEach((el) =>
      el.addEventListener('input', () => {
        draftField(el.dataset.editExplanation as string).explanation = el.value;
      }));
    root.querySelectorAll<HTMLInputElement>('input[data-edit-answer]').forEach((el) =>
      el.addEventListener('input', () => {
        draftField(el.dataset.editAnswer as string).answerLabel = el.value;
      }));
  }

  const ready = (async () => {
    const job = await pollJob(api, jobId, {
      intervalMs: options.pollIntervalMs ?? 1000,
      onUpdate: options.onStateChange,
    });
    if (job.state === 'Failed') {
      root.innerHTML = `<p class="board-state failed">Generation failed: ${escapeHtml(job.reason ?? 'unknown')}</p>`;
      return;
    }
    await refresh();
  })();

  return { element: root, ready, refresh, questions: () => questions };
}
