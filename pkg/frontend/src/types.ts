// Mirrors of the engine's canonical JSON payloads (snake_case preserved).

export interface EventRecord {
  ts: string;
  session_id: string;
  seq: number;
  kind: string;
  payload: Record<string, unknown>;
}

export interface AmbiguityResolution {
  source: "PENDING" | "HUMAN" | "MODEL_FILL" | "LITERAL";
  answer: string;
}

export interface AmbiguousElement {
  element: string;
  reason: string;
  clarification_questions: string[];
  resolution: AmbiguityResolution;
}

export interface AnalysisReport {
  identified_elements: {
    main_subjects: { name: string; attributes: string }[];
    references: string | null;
  };
  creativity_fills: Record<string, string>;
  ambiguous_elements: AmbiguousElement[];
  detailed_prompt: string;
}

export interface EditSpec {
  mode: "ADD" | "REPLACE" | "REMOVE";
  target_expression: string;
  mask: string | null;
}

export interface GenerationPlan {
  task_kind: "GENERATE" | "EDIT";
  selected_model: string;
  generating_prompt: string;
  reference_content_image: string | null;
  reference_style_image: string | null;
  edit_spec: EditSpec | null;
  reasoning: string;
  confidence: number;
}

export interface EvaluationResult {
  aesthetic: Record<string, number>;
  alignment: Record<string, number>;
  missing_elements: string[];
  improvement_suggestions: string;
  overall: number;
}

export const AESTHETIC_KEYS = [
  "composition",
  "color_harmony",
  "lighting_exposure",
  "focus_sharpness",
  "emotional_impact",
  "uniqueness_creativity",
] as const;

export const ALIGNMENT_KEYS = [
  "main_subjects_presence",
  "spatial_accuracy",
  "style_adherence",
  "background_representation",
] as const;

export const SCORE_KEYS = [...AESTHETIC_KEYS, ...ALIGNMENT_KEYS];
