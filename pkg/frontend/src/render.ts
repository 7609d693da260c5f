// Canvas road view. Pure drawing from the view state; the only geometry
// derived client-side is pixel mapping of server-provided coordinates.

import { ViewState } from "./view.js";

const ROAD_AHEAD = 120; // meters of road drawn ahead of the vehicle
const ROAD_BEHIND = 30;

export function drawScene(canvas: HTMLCanvasElement, view: ViewState, steerSwa: number): void {
  const ctx = canvas.getContext("2d");
  if (!ctx) return;
  const { width, height } = canvas;
  ctx.fillStyle = "#10141a";
  ctx.fillRect(0, 0, width, height);
  const config = view.config;
  const state = view.latest;
  if (!config || !state) {
    ctx.fillStyle = "#8899aa";
    ctx.font = "16px sans-serif";
    ctx.fillText("waiting for session...", 20, height / 2);
    return;
  }

  const laneW = config.road.lane_width;
  const westEdge = 1.5 * laneW;
  const eastEdge = -0.5 * laneW;
  // longitudinal: map [s - ROAD_BEHIND, s + ROAD_AHEAD] to [0, width]
  const sToX = (s: number) => ((s - state.s + ROAD_BEHIND) / (ROAD_AHEAD + ROAD_BEHIND)) * width;
  // lateral: positive y (west/left) is drawn upward
  const margin = 40;
  const yToPx = (y: number) =>
    height - margin - ((y - eastEdge) / (westEdge - eastEdge)) * (height - 2 * margin);

  // asphalt
  ctx.fillStyle = "#2a2f36";
  ctx.fillRect(0, yToPx(westEdge), width, yToPx(eastEdge) - yToPx(westEdge));

  // marking gap shading
  const gapX0 = sToX(config.road.marking_gap_start);
  const gapX1 = sToX(config.road.marking_gap_end);
  if (gapX1 > 0 && gapX0 < width) {
    ctx.fillStyle = "rgba(200, 160, 40, 0.18)";
    ctx.fillRect(
      Math.max(0, gapX0),
      yToPx(westEdge),
      Math.min(width, gapX1) - Math.max(0, gapX0),
      yToPx(eastEdge) - yToPx(westEdge),
    );
  }

  // edges and center line; the center marking disappears inside the gap
  const drawLine = (y: number, dashed: boolean, skipGap: boolean) => {
    ctx.strokeStyle = "#cfd8e3";
    ctx.lineWidth = 2;
    ctx.setLineDash(dashed ? [14, 10] : []);
    const py = yToPx(y);
    if (!skipGap || gapX1 <= 0 || gapX0 >= width) {
      ctx.beginPath();
      ctx.moveTo(0, py);
      ctx.lineTo(width, py);
      ctx.stroke();
    } else {
      ctx.beginPath();
      ctx.moveTo(0, py);
      ctx.lineTo(Math.max(0, gapX0), py);
      ctx.moveTo(Math.min(width, gapX1), py);
      ctx.lineTo(width, py);
      ctx.stroke();
    }
    ctx.setLineDash([]);
  };
  drawLine(westEdge, false, false);
  drawLine(eastEdge, false, false);
  drawLine(laneW / 2, true, true); // lane separator vanishes in the gap

  // target lane marker
  ctx.strokeStyle = "rgba(80, 170, 255, 0.5)";
  ctx.lineWidth = 1;
  ctx.beginPath();
  ctx.moveTo(0, yToPx(state.target_lane));
  ctx.lineTo(width, yToPx(state.target_lane));
  ctx.stroke();

  // ego vehicle (4.5 m x 1.8 m)
  const egoX = sToX(state.s);
  const egoY = yToPx(state.y);
  const pxPerMeterX = width / (ROAD_AHEAD + ROAD_BEHIND);
  const pxPerMeterY = (height - 2 * margin) / (westEdge - eastEdge);
  ctx.save();
  ctx.translate(egoX, egoY);
  ctx.rotate(-state.heading);
  ctx.fillStyle = view.latest?.mode === "DRIVER_CONTROL" ? "#4db6ac" : "#5c9ded";
  ctx.fillRect(-2.25 * pxPerMeterX, -0.9 * pxPerMeterY, 4.5 * pxPerMeterX, 1.8 * pxPerMeterY);
  ctx.restore();

  // HUD: time, speed, steering
  ctx.fillStyle = "#cfd8e3";
  ctx.font = "14px monospace";
  ctx.fillText(`t ${state.t.toFixed(2)} s`, 12, 20);
  ctx.fillText(`v ${(state.speed * 3.6).toFixed(0)} km/h`, 12, 38);
  ctx.fillText(`steer ${steerSwa.toFixed(0)} deg`, 12, 56);
}
