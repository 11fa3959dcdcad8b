/** Shapes exchanged with the QC service. */

export interface SampleInfo {
  id: string;
  task: "addition_modification" | "deletion";
  caption: string;
  caption_length_class: string;
  augmentation: string;
  propagation: string;
  entity_label: string | null;
  fps: string;
  resolution: [number, number];
}

export interface SamplePayload {
  sample: SampleInfo;
  media: {
    frames: string[];
    masks: string[];
  };
  n_frames: number;
}

export interface VerdictPayload {
  sample_id: string;
  reviewer_id: string;
  mg: boolean;
  ta: boolean;
  mp?: boolean;
}

export interface QualityStats {
  mg_rate: number | null;
  mp_rate: number | null;
  ta_rate: number | null;
  hq_rate: number | null;
  n_reviewed: number;
}

/** Dimensions a reviewer toggles; mp is only present for multi-frame samples. */
export interface VerdictToggles {
  mg: boolean;
  ta: boolean;
  mp: boolean | null;
}
