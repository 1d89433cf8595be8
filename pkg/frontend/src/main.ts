import { ApiClient, ApiError } from './api.js';
import { createReviewBoard } from './reviewBoard.js';
import { createSpecForm } from './specForm.js';

// Served at /ui by the backend, so API routes live one level up.
const api = new ApiClient('..');

const formContainer = document.getElementById('spec-form') as HTMLElement;
const boardContainer = document.getElementById('board') as HTMLElement;
const statusLine = document.getElementById('job-status') as HTMLElement;
const exportButtons = document.getElementById('export-buttons') as HTMLElement;

const form = createSpecForm(formContainer, {
  onSubmit: async (spec) => {
    form.setServerErrors([]);
    try {
      const { job_id } = await api.createJob(spec);
      statusLine.textContent = `Job ${job_id}: Pending`;
      boardContainer.innerHTML = '';
      createReviewBoard(boardContainer, api, job_id, {
        onStateChange: (job) => {
          statusLine.textContent = `Job ${job.job_id}: ${job.state}${job.reason ? ` (${job.reason})` : ''}`;
        },
      });
    } catch (err) {
      if (err instanceof ApiError && err.status === 400) {
        const body = err.body as { errors?: string[]; detail?: string };
        form.setServerErrors(body.errors ?? ['BadRequest'], body.detail);
      } else {
        form.setServerErrors(['RequestFailed'], String(err));
      }
    }
  },
});

function download(name: string, content: string, type: string): void {
  const blob = new Blob([content], { type });
  const url = URL.createObjectURL(blob);
  const link = document.createElement('a');
  link.href = url;
  link.download = name;
  link.click();
  URL.revokeObjectURL(url);
}

exportButtons.addEventListener('click', async (event) => {
  const target = event.target as HTMLElement;
  const format = target.dataset.export as 'markdown' | 'json' | undefined;
  if (!format) return;
  const text = await api.exportDocument({
    format,
    answer_key_separate: format === 'markdown',
  });
  download(format === 'json' ? 'exam.json' : 'exam.md', text,
    format === 'json' ? 'application/json' : 'text/markdown');
});
