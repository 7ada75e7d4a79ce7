import { describe, expect, it, vi } from "vitest";

import {
  decisionBody,
  dropItem,
  emptyDraft,
  emptyQueue,
  selectStep,
  setLabel,
  startAccept,
  startReject,
  submitDecision,
  toggleType,
  validateDraft,
  withItems,
  type QueueState,
} from "../src/state.js";
import { item, verdict } from "./fixtures.js";

const three = () => withItems(emptyQueue(), [item("i1"), item("i2"), item("i3")]);

describe("queue selection", () => {
  it("selects the first item when the list arrives", () => {
    expect(three().selectedId).toBe("i1");
  });

  it("keeps the selection across a refresh when still present", () => {
    const state = { ...three(), selectedId: "i2" };
    const next = withItems(state, [item("i2"), item("i3")]);
    expect(next.selectedId).toBe("i2");
  });

  it("falls back to the first item when the selection vanished", () => {
    const state = { ...three(), selectedId: "i1" };
    const next = withItems(state, [item("i2"), item("i3")]);
    expect(next.selectedId).toBe("i2");
  });

  it("steps down and clamps at the ends", () => {
    let state = three();
    state = selectStep(state, 1);
    expect(state.selectedId).toBe("i2");
    state = selectStep(state, 5);
    expect(state.selectedId).toBe("i3");
    state = selectStep(state, -10);
    expect(state.selectedId).toBe("i1");
  });

  it("stepping an empty queue is a no-op", () => {
    const state = selectStep(emptyQueue(), 1);
    expect(state.selectedId).toBeNull();
  });

  it("dropping the selected item selects its successor", () => {
    let state: QueueState = { ...three(), selectedId: "i2" };
    state = dropItem(state, "i2");
    expect(state.items.map((i) => i.id)).toEqual(["i1", "i3"]);
    expect(state.selectedId).toBe("i3");
  });

  it("dropping the last selected item selects the new last", () => {
    let state: QueueState = { ...three(), selectedId: "i3" };
    state = dropItem(state, "i3");
    expect(state.selectedId).toBe("i2");
  });

  it("dropping an unselected item leaves the selection alone", () => {
    const state = dropItem({ ...three(), selectedId: "i1" }, "i3");
    expect(state.selectedId).toBe("i1");
    expect(state.items).toHaveLength(2);
  });

  it("dropping the only item empties the selection", () => {
    const one = withItems(emptyQueue(), [item("solo")]);
    expect(dropItem(one, "solo").selectedId).toBeNull();
  });
});

describe("decision draft", () => {
  it("accepting adopts the machine verdict label", () => {
    const d = startAccept(emptyDraft(), verdict("fake", 70));
    expect(d.accept).toBe(true);
    expect(d.finalLabel).toBe("fake");
  });

  it("accepting an unassessed item leaves the label open", () => {
    expect(startAccept(emptyDraft(), null).finalLabel).toBeNull();
  });

  it("switching the label to real clears picked types", () => {
    let d = startAccept(emptyDraft(), verdict("fake", 70));
    d = toggleType(d, "image_ooc");
    expect(d.types).toEqual(["image_ooc"]);
    d = setLabel(d, "real");
    expect(d.types).toEqual([]);
  });

  it("type toggles are ignored until the draft is accept+fake", () => {
    expect(toggleType(emptyDraft(), "deepfake").types).toEqual([]);
    const rejected = startReject(emptyDraft());
    expect(toggleType(rejected, "deepfake").types).toEqual([]);
  });

  it("toggling twice removes the type again", () => {
    let d = setLabel(emptyDraft(), "fake");
    d = toggleType(d, "deepfake");
    d = toggleType(d, "image_ooc");
    d = toggleType(d, "deepfake");
    expect(d.types).toEqual(["image_ooc"]);
  });

  it("rejecting wipes label and types", () => {
    let d = setLabel(emptyDraft(), "fake");
    d = toggleType(d, "image_ooc");
    d = startReject(d);
    expect(d).toMatchObject({ accept: false, finalLabel: null, types: [] });
  });
});

describe("validateDraft", () => {
  const rev = "rev-1";

  it("requires a reviewer id", () => {
    const d = setLabel(emptyDraft(), "real");
    expect(validateDraft(d, "  ")).toMatch(/reviewer/);
  });

  it("requires an accept/reject choice", () => {
    expect(validateDraft(emptyDraft(), rev)).toMatch(/accept or reject/);
  });

  it("accept needs a final label", () => {
    const d = { ...emptyDraft(), accept: true as const };
    expect(validateDraft(d, rev)).toMatch(/final label/);
  });

  it("blocks accepting as fake with no types", () => {
    const d = setLabel(emptyDraft(), "fake");
    expect(validateDraft(d, rev)).toMatch(/at least one type/);
  });

  it("passes accepting as fake once a type is picked", () => {
    const d = toggleType(setLabel(emptyDraft(), "fake"), "image_ooc");
    expect(validateDraft(d, rev)).toBeNull();
  });

  it("passes accepting as real with no types", () => {
    expect(validateDraft(setLabel(emptyDraft(), "real"), rev)).toBeNull();
  });

  it("passes a bare reject", () => {
    expect(validateDraft(startReject(emptyDraft()), rev)).toBeNull();
  });
});

describe("decisionBody", () => {
  it("carries label and types for an accepted fake", () => {
    let d = toggleType(setLabel(emptyDraft(), "fake"), "image_ooc");
    d = { ...d, note: "  confirmed  " };
    expect(decisionBody(d, " rev-1 ")).toEqual({
      accept: true,
      reviewer_id: "rev-1",
      final_label: "fake",
      types: ["image_ooc"],
      note: "confirmed",
    });
  });

  it("omits types for an accepted real", () => {
    const body = decisionBody(setLabel(emptyDraft(), "real"), "rev-1");
    expect(body).toEqual({ accept: true, reviewer_id: "rev-1", final_label: "real" });
  });

  it("omits label and types on reject", () => {
    const body = decisionBody(startReject(emptyDraft()), "rev-1");
    expect(body).toEqual({ accept: false, reviewer_id: "rev-1" });
  });
});

describe("submitDecision", () => {
  it("never calls the service for an invalid draft", async () => {
    const decide = vi.fn();
    const state = three();
    const d = setLabel(emptyDraft(), "fake"); // fake with no types
    const outcome = await submitDecision({ decide }, state, "i1", d, "rev-1");
    expect(outcome).toEqual({ kind: "blocked", reason: "accepting as fake needs at least one type" });
    expect(decide).not.toHaveBeenCalled();
  });

  it("drops the item from the queue after the service confirms", async () => {
    const decided = { ...item("i1"), status: "accepted" as const };
    const decide = vi.fn().mockResolvedValue(decided);
    const d = toggleType(setLabel(emptyDraft(), "fake"), "image_ooc");
    const outcome = await submitDecision({ decide }, three(), "i1", d, "rev-1");
    expect(decide).toHaveBeenCalledWith("i1", {
      accept: true,
      reviewer_id: "rev-1",
      final_label: "fake",
      types: ["image_ooc"],
    });
    if (outcome.kind !== "decided") throw new Error(`unexpected ${outcome.kind}`);
    expect(outcome.state.items.map((i) => i.id)).toEqual(["i2", "i3"]);
  });

  it("maps service rejections to an error outcome", async () => {
    const { ApiError } = await import("../src/api.js");
    const decide = vi.fn().mockRejectedValue(new ApiError(409, "item already decided"));
    const d = toggleType(setLabel(emptyDraft(), "fake"), "image_ooc");
    const outcome = await submitDecision({ decide }, three(), "i1", d, "rev-1");
    expect(outcome).toEqual({ kind: "error", status: 409, message: "item already decided" });
  });
});
