/**
 * Error raised when the underlying tabseq CLI reports a failure.
 *
 * The message carries the CLI's stderr (or the per-line error payload)
 * verbatim, so callers can match on the original validation text.
 */
export class TabseqCliError extends Error {
  readonly exitCode: number;

  constructor(message: string, exitCode: number) {
    super(message);
    this.name = "TabseqCliError";
    this.exitCode = exitCode;
  }
}
