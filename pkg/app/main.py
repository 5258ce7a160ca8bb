import sys

# ---------------------------------------------------
# Ensure UTF-8 logs (Windows-safe)
# ---------------------------------------------------
if hasattr(sys.stdout, "reconfigure"):
    sys.stdout.reconfigure(encoding="utf-8")
    sys.stderr.reconfigure(encoding="utf-8")

from fastapi import FastAPI
from fastapi.middleware.cors import CORSMiddleware

from app.config import TOOL_VERSION, validate_config
from app.logger import log

# ---------------------------------------------------
# Import App Routes
# ---------------------------------------------------
from app.routes import experiments, root

# ---------------------------------------------------
# Create FastAPI App
# ---------------------------------------------------
app = FastAPI(
    title="Cavity Readout Simulator API",
    description="Rates, SPAM tables and mid-circuit Ramsey benchmarks for cavity-assisted atom readout",
    version=TOOL_VERSION,
)

# ---------------------------------------------------
# CORS
# ---------------------------------------------------
app.add_middleware(
    CORSMiddleware,
    allow_origins=["*"],
    allow_credentials=True,
    allow_methods=["*"],
    allow_headers=["*"],
)

# ---------------------------------------------------
# Register Routers
# ---------------------------------------------------
app.include_router(root.router)
app.include_router(experiments.router)


# ---------------------------------------------------
# Startup Tasks
# ---------------------------------------------------
@app.on_event("startup")
async def startup_event():
    validate_config()
    log("Cavity readout API ready", "SUCCESS")


# ---------------------------------------------------
# Uvicorn Server
# ---------------------------------------------------
if __name__ == "__main__":
    import os

    import uvicorn

    port = int(os.getenv("PORT", 10000))
    log(f"Starting development server on 0.0.0.0:{port}")
    uvicorn.run("app.main:app", host="0.0.0.0", port=port, log_level="info", reload=True)
