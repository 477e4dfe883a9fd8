/** Console state and its pure update rules.
 *
 * The console computes nothing about the knowledge base itself: every value
 * it renders was fetched. Each applier takes the revision stamped on the
 * response and drops the update when a newer revision has already been
 * rendered, so slow poll responses can never roll the view backwards.
 */

import type { KbStats, QuestionView, SessionMetric, TrainingStatus, TripleView } from "./api";

export interface Acknowledgment {
  text: string;
  committed: TripleView;
  added: boolean;
}

export interface ConsoleState {
  revision: number;
  question: QuestionView | null;
  lastAck: Acknowledgment | null;
  stats: KbStats | null;
  training: TrainingStatus | null;
  sessions: SessionMetric[];
  connected: boolean;
  inlineError: string | null;
  submitting: boolean;
}

export function initialState(): ConsoleState {
  return {
    revision: -1,
    question: null,
    lastAck: null,
    stats: null,
    training: null,
    sessions: [],
    connected: true,
    inlineError: null,
    submitting: false,
  };
}

/** True when a response stamped with `revision` is current enough to render. */
export function acceptRevision(state: ConsoleState, revision: number): boolean {
  return revision >= state.revision;
}

function bump(state: ConsoleState, revision: number): ConsoleState {
  return { ...state, revision: Math.max(state.revision, revision), connected: true };
}

export function applyQuestion(
  state: ConsoleState,
  revision: number,
  question: QuestionView | null,
): ConsoleState {
  if (!acceptRevision(state, revision)) return state;
  return { ...bump(state, revision), question };
}

export function applyStats(state: ConsoleState, stats: KbStats): ConsoleState {
  if (!acceptRevision(state, stats.revision)) return state;
  return { ...bump(state, stats.revision), stats };
}

export function applyTraining(state: ConsoleState, training: TrainingStatus): ConsoleState {
  if (!acceptRevision(state, training.revision)) return state;
  return { ...bump(state, training.revision), training };
}

export function applySessions(
  state: ConsoleState,
  revision: number,
  sessions: SessionMetric[],
): ConsoleState {
  if (!acceptRevision(state, revision)) return state;
  return { ...bump(state, revision), sessions };
}

export function applyAcknowledgment(
  state: ConsoleState,
  revision: number,
  ack: Acknowledgment,
): ConsoleState {
  // an answer mutated the engine, so its revision is always newest
  return {
    ...bump(state, revision),
    question: null,
    lastAck: ack,
    inlineError: null,
    submitting: false,
  };
}

export function applyInlineError(state: ConsoleState, message: string): ConsoleState {
  // the question (and whatever the user typed) stays in place
  return { ...state, inlineError: message, submitting: false };
}

export function applyDisconnected(state: ConsoleState): ConsoleState {
  return { ...state, connected: false };
}

export function applySubmitting(state: ConsoleState): ConsoleState {
  return { ...state, inlineError: null, submitting: true };
}

/** Mirrors the service's verdict invariant: a "no" needs a correction. */
export function validateVerdict(answer: "yes" | "no", correction: string): string | null {
  if (answer === "no" && correction.trim() === "") {
    return "a 'no' answer needs the correct tail entity";
  }
  return null;
}
