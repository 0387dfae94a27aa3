// Browser entry point. Base URL comes from ?api=... or defaults to same origin.

import { ApiClient } from "./api.js";
import { mountApp } from "./app.js";

const params = new URLSearchParams(window.location.search);
const baseUrl = params.get("api") ?? "";
const root = document.getElementById("app");
if (root) {
  void mountApp(root, new ApiClient(baseUrl));
}
