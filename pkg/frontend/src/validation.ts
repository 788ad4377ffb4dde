// Client-side answer validation. This rule must stay identical to the
// server's: a label can never precede the record's censoring time.

export type AnswerCheck = { ok: true; eventTime: number } | { ok: false; reason: string };

export function validateAnswer(rawInput: string, censoringTime: number): AnswerCheck {
  const trimmed = rawInput.trim();
  if (trimmed === "") {
    return { ok: false, reason: "Enter a time-to-event in months." };
  }
  const eventTime = Number(trimmed);
  if (!Number.isFinite(eventTime)) {
    return { ok: false, reason: `"${trimmed}" is not a number of months.` };
  }
  if (eventTime < censoringTime) {
    return {
      ok: false,
      reason: `Time-to-event must be at least the censoring time (${censoringTime} months).`,
    };
  }
  return { ok: true, eventTime };
}
