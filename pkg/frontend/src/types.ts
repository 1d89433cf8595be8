// Wire types mirroring the HTTP API's JSON shapes. The server stays the
// validator of record; everything here is display plumbing.

export type QuestionKind = 'MultipleChoice' | 'ShortAnswer' | 'Essay';

export type CurationStatus = 'Draft' | 'Accepted' | 'Rejected';

export interface SpecPayload {
  kind: QuestionKind;
  target_language: string;
  scope_topics: string[];
  total: number;
  distribution: Record<string, number>;
  enabled_types: string[];
  criteria: string[];
  role_noun: string;
  few_shot_examples: string[] | null;
}

export interface CodeBlock {
  language_hint: string;
  source: string;
}

export interface OptionItem {
  label: string;
  text: string;
}

export type AnswerPayload =
  | { type: 'single_option'; label: string }
  | { type: 'multi_option'; labels: string[] }
  | { type: 'text'; text: string }
  | { type: 'code'; code: CodeBlock; expected_behavior: string | null };

export interface Finding {
  severity: 'Error' | 'Warning' | 'Info';
  code: string;
  message: string;
  question_id?: string | null;
}

export interface QuestionView {
  id: string;
  ordinal: number;
  kind: QuestionKind;
  qtype: string | null;
  difficulty: number | null;
  stem: string;
  code_blocks: CodeBlock[];
  options: OptionItem[];
  answer: AnswerPayload;
  explanation: string;
  status: CurationStatus;
  job_id: string;
  validation: Finding[];
  allowed_transitions: CurationStatus[];
}

export interface JobView {
  job_id: string;
  parent_job_id: string | null;
  state: 'Pending' | 'Prompted' | 'Received' | 'Parsed' | 'Validated' | 'Failed';
  reason: string | null;
  spec: SpecPayload;
  diagnostics_summary: { errors: number; warnings: number };
  report: { passed: boolean; findings: Finding[] } | null;
  question_ids: string[];
}

export interface ExportFilter {
  format: 'markdown' | 'json';
  answer_key_separate?: boolean;
  kinds?: string;
  min_difficulty?: number;
  max_difficulty?: number;
  language?: string;
  limit?: number;
  title?: string;
}

export type CurateAction =
  | { action: 'accept' }
  | { action: 'reject' }
  | { action: 'edit'; patch: Partial<Pick<QuestionView, 'stem' | 'options' | 'explanation'>> & { answer?: AnswerPayload } };

// The question-type catalog shown in the spec form checklist. Names must
// match the server's enum values; descriptions are the template lines.
export const QUESTION_TYPE_CATALOG: Record<QuestionKind, { name: string; label: string }[]> = {
  MultipleChoice: [
    { name: 'OutputOrErrorSelection', label: 'Select the correct answer related to the execution result or the cause of an error in a given code snippet' },
    { name: 'MultiCorrectBehavior', label: 'Choose multiple correct answers related to the behavior or execution result of a code snippet' },
    { name: 'StepOrdering', label: 'Arrange code snippets or algorithm steps in the correct execution sequence' },
    { name: 'FillInBlankChoice', label: 'Fill in the blank with appropriate keywords or function names from the given options' },
    { name: 'AlgorithmSelection', label: 'Select the most suitable algorithm or programming approach for a given problem scenario' },
    { name: 'TermDefinitionMatching', label: 'Match programming terms with their definitions' },
    { name: 'ProgramAssembly', label: 'Select the correct combination of code snippets or options to create a valid program' },
    { name: 'OutputCauseAnalysis', label: 'Analyze the output of a code snippet and identify the cause of the result' },
    { name: 'BehaviorDescriptionMatch', label: 'Select the explanation that matches the behavior or definition of a code snippet or algorithm' },
    { name: 'ModificationPrediction', label: 'Predict the result of modifying or replacing parts of a code snippet' },
  ],
  ShortAnswer: [
    { name: 'PredictOutput', label: 'Predict the output of the provided code' },
    { name: 'FillMissingCode', label: 'Fill in the missing parts of the program or complete the entire code' },
    { name: 'DataDrivenCompletion', label: 'Analyze the provided table or graph and complete the missing parts of the program or complete the entire code' },
    { name: 'CodeFromOutput', label: 'Generate code to match a given output' },
    { name: 'CodeFromConditions', label: 'Write code based on detailed instructions and conditions provided' },
    { name: 'MultiFunctionProgram', label: 'Create complete programs with multiple functions addressing various requirements' },
  ],
  Essay: [
    { name: 'TermExplanation', label: 'Explain specific programming terms' },
    { name: 'ErrorCauseAnalysis', label: 'Analyze the cause of errors in provided code and explain' },
    { name: 'CodeImprovement', label: 'Identify problems in given code and propose improvements' },
  ],
};

export const DIFFICULTY_LEVELS = [1, 2, 3, 4, 5] as const;

export function distributionSum(distribution: Record<string, number>): number {
  return DIFFICULTY_LEVELS.reduce((acc, level) => acc + (distribution[String(level)] || 0), 0);
}
