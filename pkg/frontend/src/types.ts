/** Wire types mirroring the motion-agent HTTP API. */

export interface PlanCall {
  task: "generate" | "caption";
  argument: string;
  motion_ref: string | null;
  placement: [number, number, number] | null;
}

export interface PlanDoc {
  response: string | null;
  calls: PlanCall[];
}

export interface TurnResponse {
  plan: PlanDoc;
  response_text: string | null;
  motion_ids: string[];
  captions: string[];
}

export interface SessionTurn {
  index: number;
  user_text: string;
  plan: PlanDoc;
  response_text: string | null;
  motion_ids: string[];
  captions: string[];
}

export interface SessionDoc {
  session_id: string;
  motion_ids: string[];
  turns: SessionTurn[];
}

export interface JointsDoc {
  motion_id: string;
  fps: number;
  /** frames x joints x 3, world meters */
  joints: number[][][];
  parent: number[];
  joint_names: string[];
  placement_applied: boolean;
  boundary_frames: number[];
  sources: string[];
  truncated: boolean;
}
