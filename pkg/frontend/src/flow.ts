import type { Api } from './api.js';
import { pollJob } from './poll.js';
import type { SpecPayload } from './types.js';

export interface FlowResult {
  jobId: string;
  childJobId: string;
  markdown: string;
  exportedQuestionCount: number;
}

/** The whole curation loop as one scripted sequence: generate, reject
 * one question, regenerate its slot, accept everything, download the
 * Markdown export. Used by the end-to-end tests and reusable from the
 * page for demos. */
export async function runCurationFlow(
  api: Api,
  spec: SpecPayload,
  options: { rejectIndex?: number; pollIntervalMs?: number } = {},
): Promise<FlowResult> {
  const pollMs = options.pollIntervalMs ?? 1000;

  const { job_id } = await api.createJob(spec);
  const job = await pollJob(api, job_id, { intervalMs: pollMs });
  if (job.state !== 'Validated') {
    throw new Error(`generation failed: ${job.reason}`);
  }

  const questions = await api.listQuestions(job_id);
  const victim = questions[options.rejectIndex ?? 0];
  await api.curate(victim.id, { action: 'reject' });

  const { job_id: childJobId } = await api.regenerate(victim.id);
  const child = await pollJob(api, childJobId, { intervalMs: pollMs });
  if (child.state !== 'Validated') {
    throw new Error(`regeneration failed: ${child.reason}`);
  }

  for (const question of await api.listQuestions(job_id)) {
    if (question.status === 'Draft') {
      await api.curate(question.id, { action: 'accept' });
    }
  }

  const markdown = await api.exportDocument({ format: 'markdown' });
  const exportedQuestionCount = (markdown.match(/^\*\*Question \d+/gm) ?? []).length;
  return { jobId: job_id, childJobId, markdown, exportedQuestionCount };
}
