/** Wire types mirroring the workbench service's Session resource. */

export interface AnalysisWorksheet {
  a1: 'inner' | 'outer' | 'unknown';
  a2: string[];
  raw_a1_response: string;
  raw_a2_response: string;
  backend_id: string;
  a1_parse_failed: boolean;
  a2_parse_failed: boolean;
}

export interface SessionHit {
  pair_id: string;
  jp: string;
  zh: string;
  distance: number;
  similarity: number;
  rank: number;
  selected: boolean;
  justification: string;
}

export interface PromptPayload {
  role_block: string;
  analysis_block: string;
  examples_block: string;
  instruction_block: string;
  rendered: string;
  template_version: string;
}

export interface PromptVersion {
  prompt: PromptPayload;
  note: string;
}

export interface TranslationOutput {
  output_zh: string;
  backend: { kind: string; model_id: string; params: Record<string, unknown> };
  attempt_count: number;
  prompt_version: number;
}

export interface PostEdit {
  text: string;
  note: string;
}

export interface BleuComponents {
  score: number;
  precisions: [number, number, number, number];
  bp: number;
  hyp_len: number;
  ref_len: number;
  smoothing_applied: boolean;
  epsilon: number;
}

export interface ScoreRecord {
  reference: string;
  candidate: string;
  candidate_kind: 'output' | 'post_edit';
  bleu: BleuComponents;
}

export interface Session {
  session_id: string;
  sl: string;
  status: 'open' | 'archived';
  analysis: AnalysisWorksheet | null;
  hits: SessionHit[];
  prompt_versions: PromptVersion[];
  outputs: TranslationOutput[];
  post_edits: PostEdit[];
  scores: ScoreRecord[];
}

export interface SessionExport {
  session_id: string;
  sl: string;
  status: string;
  analysis_worksheet: AnalysisWorksheet | null;
  retrieval_log: SessionHit[];
  prompt_versions: PromptVersion[];
  translations: TranslationOutput[];
  review_records: { post_edits: PostEdit[]; scores: ScoreRecord[] };
}

export interface HitSelection {
  rank: number;
  selected: boolean;
  justification: string;
}

export interface KbStatus {
  pairs: number;
  index_loaded: boolean;
  dim: number | null;
  encoder_id: string | null;
}
