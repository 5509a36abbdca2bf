/* utiqLoader.js (simulated origin build) */
(function (w, d) {
  "use strict";
  var publisher = w.location.hostname.replace(/^www\./, "");
  var base = w.location.protocol + "//utiq." + publisher + (w.location.port ? ":" + w.location.port : "");
  var VALIDITY = 7776000;

  function cookie(name) {
    var m = d.cookie.match(new RegExp("(?:^|; )" + name + "=([^;]*)"));
    return m ? decodeURIComponent(m[1]) : null;
  }

  function post(path, body) {
    return fetch(base + path, {
      method: "POST",
      credentials: "include",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body || {})
    });
  }

  function showConsentManager() {
    return new Promise(function (resolve) {
      var hook = w.utiqConsentManager;
      if (typeof hook === "function") return hook(resolve);
      resolve(w.confirm("Allow your network operator to provide a pseudonymous identifier?") ? "accept" : "decline");
    });
  }

  function precheck() {
    return fetch(base + "/op/idconnect/mno-precheck", { credentials: "include" })
      .then(function (r) { return r.json(); })
      .then(function (body) {
        var eligible = body && body.status === "ok";
        w.localStorage.setItem("utiqEligibility", JSON.stringify({
          eligible: eligible,
          checked_at: Math.floor(Date.now() / 1000)
        }));
        return eligible;
      });
  }

  function run() {
    var consented = cookie("utiq_consent_status");
    var step = consented
      ? Promise.resolve(consented === "granted")
      : showConsentManager().then(function (decision) {
          return post("/op/idconnect/consent", { decision: decision })
            .then(function () { return decision === "accept"; });
        });

    return step.then(function (ok) {
      if (!ok) return null;
      return precheck().then(function (eligible) {
        if (!eligible) return null;
        return post("/op/idconnect/token", { publisher: publisher })
          .then(function (r) { return r.ok ? r.json() : null; })
          .then(function (pass) {
            if (pass) w.localStorage.setItem("utiqPass", JSON.stringify(pass));
            return pass;
          });
      });
    });
  }

  w.Utiq = { run: run, validity: VALIDITY };
  if (w.__utiqAutoRun !== false) run();
})(window, document);
