import { StudyApi } from "./api.js";
import { App } from "./app.js";

const root = document.getElementById("app");
if (!root) throw new Error("missing #app root element");

const params = new URLSearchParams(window.location.search);
const app = new App({
  root,
  api: new StudyApi("", (...a) => window.fetch(...a)),
  storage: window.sessionStorage,
});
app.boot(params.get("study") ?? "");
