/** Orchestrates polling and verdict submission over the typed client.
 *
 * Deliberately DOM-free: the render layer subscribes to state changes, and
 * the round-trip tests drive this class directly against a live engine.
 */

import { ApiClient, ApiError } from "./api";
import {
  applyAcknowledgment,
  applyDisconnected,
  applyInlineError,
  applyQuestion,
  applySessions,
  applyStats,
  applySubmitting,
  applyTraining,
  ConsoleState,
  initialState,
  validateVerdict,
} from "./state";

export type Listener = (state: ConsoleState) => void;

export class ConsoleController {
  private state: ConsoleState = initialState();
  private listeners: Listener[] = [];

  constructor(private readonly api: ApiClient) {}

  get current(): ConsoleState {
    return this.state;
  }

  subscribe(listener: Listener): void {
    this.listeners.push(listener);
    listener(this.state);
  }

  private setState(next: ConsoleState): void {
    if (next === this.state) return;
    this.state = next;
    for (const listener of this.listeners) listener(next);
  }

  /** One poll round: next question plus the dashboard snapshots. */
  async poll(): Promise<void> {
    try {
      const [next, stats, training, metrics] = await Promise.all([
        this.api.nextQuestion(),
        this.api.kbStats(),
        this.api.trainingStatus(),
        this.api.sessionMetrics(),
      ]);
      let state = this.state;
      state = applyQuestion(state, next.revision, next.question);
      state = applyStats(state, stats);
      state = applyTraining(state, training);
      state = applySessions(state, metrics.revision, metrics.sessions);
      this.setState(state);
    } catch {
      this.setState(applyDisconnected(this.state));
    }
  }

  /** Client-side mirror of the verdict invariant; null means submittable. */
  validate(answer: "yes" | "no", correction: string): string | null {
    return validateVerdict(answer, correction);
  }

  /** Submit the verdict for the displayed question.
   *
   * Server rejections (409 stale question, 422 bad verdict) surface inline
   * without clearing the question or the typed correction. At most one
   * submission is in flight; extra calls while pending are ignored.
   */
  async submit(answer: "yes" | "no", correction?: string): Promise<boolean> {
    const question = this.state.question;
    if (!question || this.state.submitting) return false;
    this.setState(applySubmitting(this.state));
    try {
      const response = await this.api.answerQuestion(question.id, answer, correction);
      this.setState(
        applyAcknowledgment(this.state, response.revision, {
          text: response.ack,
          committed: response.committed,
          added: response.added,
        }),
      );
      await this.poll(); // refresh the stats the commit just changed
      return true;
    } catch (err) {
      if (err instanceof ApiError) {
        this.setState(applyInlineError(this.state, err.detail));
      } else {
        this.setState(applyDisconnected({ ...this.state, submitting: false }));
      }
      return false;
    }
  }
}
