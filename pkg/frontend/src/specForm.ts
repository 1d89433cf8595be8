import { escapeHtml } from './highlight.js';
import {
  DIFFICULTY_LEVELS,
  QUESTION_TYPE_CATALOG,
  distributionSum,
  type QuestionKind,
  type SpecPayload,
} from './types.js';

const DEFAULT_CRITERIA = [
  'Single-topic questions',
  'Questions integrating multiple topics',
  'Questions assessing creativity and problem-solving skills',
];

export interface SpecFormOptions {
  onSubmit: (spec: SpecPayload) => void | Promise<void>;
  initial?: Partial<SpecPayload>;
}

export interface SpecFormHandle {
  element: HTMLElement;
  getPayload(): SpecPayload;
  setServerErrors(codes: string[], detail?: string): void;
  refresh(): void;
}

/** The job-composition form. The sum indicator and submit gating are
 * display-only conveniences; the server remains the validator of record. */
export function createSpecForm(container: HTMLElement, options: SpecFormOptions): SpecFormHandle {
  const state: SpecPayload = {
    kind: 'MultipleChoice',
    target_language: 'Python',
    scope_topics: ['Data types, operators, conditional statements, loops'],
    total: 20,
    distribution: { '1': 3, '2': 3, '3': 5, '4': 5, '5': 4 },
    enabled_types: QUESTION_TYPE_CATALOG.MultipleChoice.map((t) => t.name),
    criteria: [...DEFAULT_CRITERIA],
    role_noun: 'expert',
    few_shot_examples: null,
    ...options.initial,
  };

  const root = document.createElement('form');
  root.className = 'spec-form';
  root.addEventListener('submit', (event) => {
    event.preventDefault();
    if (!submitButton.disabled) options.onSubmit(getPayload());
  });
  container.appendChild(root);

  const submitButton = document.createElement('button');

  function getPayload(): SpecPayload {
    return JSON.parse(JSON.stringify(state));
  }

  function setKind(kind: QuestionKind): void {
    state.kind = kind;
    // the checklist always resets to the new kind's full set
    state.enabled_types = QUESTION_TYPE_CATALOG[kind].map((t) => t.name);
    render();
  }

  function setServerErrors(codes: string[], detail?: string): void {
    const box = root.querySelector('.server-errors') as HTMLElement;
    box.innerHTML = codes.length
      ? `<strong>Server rejected the spec:</strong> ${codes.map(escapeHtml).join(', ')}` +
        (detail ? `<div class="error-detail">${escapeHtml(detail)}</div>` : '')
      : '';
  }

  function render(): void {
    const sum = distributionSum(state.distribution);
    const balanced = sum === state.total;
    root.innerHTML = `
      <div class="server-errors" role="alert"></div>
      <label>Question kind
        <select name="kind">
          ${(['MultipleChoice', 'ShortAnswer', 'Essay'] as QuestionKind[])
            .map((k) => `<option value="${k}" ${k === state.kind ? 'selected' : ''}>${k}</option>`)
            .join('')}
        </select>
      </label>
      <label>Programming language
        <input name="language" value="${escapeHtml(state.target_language)}">
      </label>
      <fieldset class="scope">
        <legend>Scope topics</legend>
        ${state.scope_topics
          .map(
            (topic, i) => `
          <div class="scope-row">
            <input data-topic="${i}" value="${escapeHtml(topic)}">
            <button type="button" data-remove-topic="${i}" ${state.scope_topics.length === 1 ? 'disabled' : ''}>×</button>
          </div>`,
          )
          .join('')}
        <button type="button" class="add-topic">Add topic</button>
      </fieldset>
      <label>Total questions
        <input name="total" type="number" min="1" value="${state.total}">
      </label>
      <fieldset class="distribution">
        <legend>Difficulty distribution</legend>
        ${DIFFICULTY_LEVELS.map(
          (level) => `
          <label class="stepper">${level}/5
            <input data-level="${level}" type="number" min="0"
                   value="${state.distribution[String(level)] || 0}">
          </label>`,
        ).join('')}
        <div class="sum-indicator ${balanced ? 'ok' : 'mismatch'}">
          sum ${sum} / total ${state.total}${balanced ? '' : ' — counts must add up to the total'}
        </div>
      </fieldset>
      <fieldset class="qtypes">
        <legend>Question types</legend>
        ${QUESTION_TYPE_CATALOG[state.kind]
          .map(
            (t) => `
          <label class="qtype">
            <input type="checkbox" data-qtype="${t.name}"
                   ${state.enabled_types.includes(t.name) ? 'checked' : ''}>
            ${escapeHtml(t.label)}
          </label>`,
          )
          .join('')}
      </fieldset>
    `;

    submitButton.type = 'submit';
    submitButton.className = 'submit';
    submitButton.textContent = 'Generate exam';
    submitButton.disabled = !balanced || state.enabled_types.length === 0;
    root.appendChild(submitButton);

    bind();
  }

  function bind(): void {
    (root.querySelector('select[name=kind]') as HTMLSelectElement).addEventListener(
      'change',
      (e) => setKind((e.target as HTMLSelectElement).value as QuestionKind),
    );
    (root.querySelector('input[name=language]') as HTMLInputElement).addEventListener(
      'change',
      (e) => {
        state.target_language = (e.target as HTMLInputElement).value;
      },
    );
    (root.querySelector('input[name=total]') as HTMLInputElement).addEventListener(
      'input',
      (e) => {
        state.total = Number((e.target as HTMLInputElement).value) || 0;
        render();
      },
    );
    root.querySelectorAll('input[data-level]').forEach((el) =>
      el.addEventListener('input', (e) => {
        const input = e.target as HTMLInputElement;
        state.distribution[input.dataset.level as string] = Math.max(0, Number(input.value) || 0);
        render();
      }),
    );
    root.querySelectorAll('input[data-topic]').forEach((el) =>
      el.addEventListener('change', (e) => {
        const input = e.target as HTMLInputElement;
        state.scope_topics[Number(input.dataset.topic)] = input.value;
      }),
    );
    root.querySelectorAll('button[data-remove-topic]').forEach((el) =>
      el.addEventListener('click', (e) => {
        state.scope_topics.splice(Number((e.target as HTMLElement).dataset.removeTopic), 1);
        render();
      }),
    );
    (root.querySelector('.add-topic') as HTMLButtonElement).addEventListener('click', () => {
      state.scope_topics.push('');
      render();
    });
    root.querySelectorAll('input[data-qtype]').forEach((el) =>
      el.addEventListener('change', (e) => {
        const box = e.target as HTMLInputElement;
        const name = box.dataset.qtype as string;
        state.enabled_types = box.checked
          ? [...state.enabled_types, name]
          : state.enabled_types.filter((t) => t !== name);
        render();
      }),
    );
  }

  render();
  return { element: root, getPayload, setServerErrors, refresh: render };
}
