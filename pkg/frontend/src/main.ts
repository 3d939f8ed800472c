// Entry point: hash routing between the participant wizard and the admin
// dashboard, one API client for both.

import { AdminApp } from "./admin.js";
import { ApiClient } from "./api.js";
import { ParticipantApp } from "./participant.js";

const api = new ApiClient("");
let admin: AdminApp | null = null;

function route(): void {
  const root = document.getElementById("app");
  if (!root) return;
  admin?.stop();
  admin = null;
  if (location.hash === "#/admin") {
    admin = new AdminApp(root, api);
    void admin.boot();
  } else {
    void new ParticipantApp(root, api).boot();
  }
}

window.addEventListener("hashchange", route);
route();
