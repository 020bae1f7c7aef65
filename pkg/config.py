from dotenv import load_dotenv
from pydantic_settings import BaseSettings


load_dotenv()

VERSION = "0.1.0"


class Settings(BaseSettings):
    SEED: int = 42
    THREADS: int = 1
    LOG_LEVEL: str = "INFO"
    OUTPUT_DIR: str = "out"
    DENSE_EIGEN_LIMIT: int = 400
    EIGEN_TOLERANCE: float = 1e-8

    class Config:
        env_file = ".env"
        extra = "ignore"


settings = Settings()
